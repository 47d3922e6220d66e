use nalgebra::{Matrix3, Matrix3x6, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum measurement gap before a track stops integrating, seconds.
pub const DEFAULT_T_EXP: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KfParams {
    /// White-acceleration spectral density, m^2/s^3.
    pub q: f64,
    /// Position measurement noise std, m.
    pub r: f64,
    pub t_exp: f64,
    /// Velocity std assigned on (re)initialization, m/s.
    pub init_velocity_std: f64,
}

impl Default for KfParams {
    fn default() -> Self {
        Self {
            q: 0.5,
            r: 0.05,
            t_exp: DEFAULT_T_EXP,
            init_velocity_std: 1.0,
        }
    }
}

/// Constant-velocity estimate `[p; v]` of the target position.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub state: Vector6<f64>,
    pub covariance: Matrix6<f64>,
    /// Time the estimate refers to.
    pub stamp: f64,
    /// Time of the last accepted measurement.
    pub last_update: f64,
    pub params: KfParams,
}

impl TrackState {
    /// Fresh track at a measurement: zero velocity, inflated velocity covariance.
    pub fn initialize(z: [f64; 3], now: f64, params: KfParams) -> Self {
        let mut covariance = Matrix6::zeros();
        let pos_var = params.r * params.r;
        let vel_var = params.init_velocity_std * params.init_velocity_std;
        for i in 0..3 {
            covariance[(i, i)] = pos_var;
            covariance[(i + 3, i + 3)] = vel_var;
        }
        Self {
            state: Vector6::new(z[0], z[1], z[2], 0.0, 0.0, 0.0),
            covariance,
            stamp: now,
            last_update: now,
            params,
        }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.state[0], self.state[1], self.state[2]]
    }

    pub fn velocity(&self) -> [f64; 3] {
        [self.state[3], self.state[4], self.state[5]]
    }

    pub fn t_exp(&self) -> f64 {
        self.params.t_exp
    }

    /// True while the last measurement is at most `t_exp` old.
    pub fn valid(&self, now: f64) -> bool {
        now - self.last_update <= self.params.t_exp
    }

    /// Standard deviations of the position components.
    pub fn position_std(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.covariance[(i, i)].max(0.0).sqrt())
    }
}

fn symmetrize(p: &Matrix6<f64>) -> Matrix6<f64> {
    (p + p.transpose()) * 0.5
}

/// Constant-velocity propagation by `dt` seconds.
pub fn kf_predict(t: &TrackState, dt: f64) -> Result<TrackState> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("prediction step must be nonnegative, got {dt}")));
    }
    let mut f = Matrix6::identity();
    let mut q = Matrix6::zeros();
    let qd = t.params.q;
    for i in 0..3 {
        f[(i, i + 3)] = dt;
        q[(i, i)] = qd * dt.powi(3) / 3.0;
        q[(i, i + 3)] = qd * dt.powi(2) / 2.0;
        q[(i + 3, i)] = qd * dt.powi(2) / 2.0;
        q[(i + 3, i + 3)] = qd * dt;
    }
    Ok(TrackState {
        state: f * t.state,
        covariance: symmetrize(&(f * t.covariance * f.transpose() + q)),
        stamp: t.stamp + dt,
        ..t.clone()
    })
}

/// Position measurement update (Joseph form). Non-finite measurements are rejected.
pub fn kf_update(t: &TrackState, z: [f64; 3], now: f64) -> Result<TrackState> {
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite position measurement"));
    }
    let mut h = Matrix3x6::zeros();
    h.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    let r = Matrix3::identity() * (t.params.r * t.params.r);

    let innovation = Vector3::new(z[0], z[1], z[2]) - h * t.state;
    let s = h * t.covariance * h.transpose() + r;
    let s_inv = s
        .try_inverse()
        .ok_or_else(|| Error::invalid("singular innovation covariance"))?;
    let gain = t.covariance * h.transpose() * s_inv;
    let i_kh = Matrix6::identity() - gain * h;
    let covariance = i_kh * t.covariance * i_kh.transpose() + gain * r * gain.transpose();
    Ok(TrackState {
        state: t.state + gain * innovation,
        covariance: symmetrize(&covariance),
        stamp: now,
        last_update: now,
        params: t.params,
    })
}

/// Owns the single target track and applies the expiration rules.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub params: KfParams,
    state: Option<TrackState>,
}

impl Tracker {
    pub fn new(params: KfParams) -> Self {
        Self { params, state: None }
    }

    pub fn state(&self) -> Option<&TrackState> {
        self.state.as_ref()
    }

    pub fn valid(&self, now: f64) -> bool {
        self.state.as_ref().is_some_and(|s| s.valid(now))
    }

    /// Advances the track to `now` and folds in an optional measurement.
    ///
    /// An expired track is not propagated; a measurement after expiry starts a
    /// fresh track.
    pub fn observe(&mut self, now: f64, z: Option<[f64; 3]>) {
        let z = z.filter(|z| z.iter().all(|v| v.is_finite()));
        let next = match (self.state.take(), z) {
            (Some(s), z) if s.valid(now) => {
                let predicted = kf_predict(&s, (now - s.stamp).max(0.0)).unwrap_or(s);
                match z {
                    Some(z) => kf_update(&predicted, z, now).ok().or(Some(predicted)),
                    None => Some(predicted),
                }
            }
            (_, Some(z)) => Some(TrackState::initialize(z, now, self.params)),
            (stale, None) => stale,
        };
        self.state = next;
    }

    pub fn reset(&mut self) {
        self.state = None;
    }
}
