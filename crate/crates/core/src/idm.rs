//! Intelligent Driver Model and the five-vehicle rollout used to predict the
//! near future of a [`NeighborContext`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ngsim::{Gaps, NeighborContext, Observation, Role, TrajectoryFrame, FRAME_DT};

/// Smallest bumper-to-bumper gap a simulated follower is allowed to reach.
pub const MIN_GAP: f64 = 0.1;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("non-positive gap of {gap} m to the leader")]
pub struct DegenerateGap {
    pub gap: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid IDM parameter `{name}` = {value}")]
pub struct InvalidParams {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdmParams {
    /// Desired speed `v0` (m/s).
    pub desired_speed: f64,
    /// Minimum standstill spacing `s0` (m).
    pub min_spacing: f64,
    /// Desired time headway `T` (s).
    pub time_headway: f64,
    /// Maximal acceleration `a` (m/s²).
    pub max_accel: f64,
    /// Comfortable deceleration `b` (m/s²).
    pub comfort_decel: f64,
    /// Free-road exponent `δ`.
    pub exponent: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            desired_speed: 30.0,
            min_spacing: 2.0,
            time_headway: 1.5,
            max_accel: 1.4,
            comfort_decel: 2.0,
            exponent: 4.0,
        }
    }
}

impl IdmParams {
    pub fn validate(&self) -> Result<(), InvalidParams> {
        let fields = [
            ("desired_speed", self.desired_speed),
            ("min_spacing", self.min_spacing),
            ("time_headway", self.time_headway),
            ("max_accel", self.max_accel),
            ("comfort_decel", self.comfort_decel),
            ("exponent", self.exponent),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(InvalidParams { name, value });
            }
        }
        Ok(())
    }

    /// Dynamic desired gap `s*`, floored at zero.
    pub fn desired_gap(&self, speed: f64, approach_rate: f64) -> f64 {
        let s = self.min_spacing
            + speed * self.time_headway
            + speed * approach_rate / (2.0 * (self.max_accel * self.comfort_decel).sqrt());
        s.max(0.0)
    }

    /// Gap at which a follower at `speed` behind an equally fast leader has
    /// zero acceleration.
    pub fn equilibrium_gap(&self, speed: f64) -> f64 {
        let free = 1.0 - (speed / self.desired_speed).powf(self.exponent);
        (self.min_spacing + speed * self.time_headway) / free.sqrt()
    }
}

/// Per-vehicle parameter derivation: the desired speed is inferred from the
/// observed speed, everything else is shared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdmConfig {
    pub base: IdmParams,
    pub desired_speed_scale: f64,
    pub desired_speed_floor: f64,
    pub observed_speed_floor: f64,
}

impl Default for IdmConfig {
    fn default() -> Self {
        Self {
            base: IdmParams::default(),
            desired_speed_scale: 1.1,
            desired_speed_floor: 10.0,
            observed_speed_floor: 0.1,
        }
    }
}

impl IdmConfig {
    pub fn params_for(&self, observed_speed: f64) -> IdmParams {
        let v0 =
            (observed_speed.max(self.observed_speed_floor) * self.desired_speed_scale).max(self.desired_speed_floor);
        IdmParams {
            desired_speed: v0,
            ..self.base
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leader {
    pub pos: f64,
    pub speed: f64,
    pub length: f64,
}

/// Eq. (1) acceleration of a follower at `pos`/`speed`, free road when
/// `leader` is `None`.
pub fn idm_accel(pos: f64, speed: f64, leader: Option<Leader>, p: &IdmParams) -> Result<f64, DegenerateGap> {
    let free = 1.0 - (speed / p.desired_speed).powf(p.exponent);
    let interaction = match leader {
        None => 0.0,
        Some(l) => {
            let gap = l.pos - pos - l.length;
            if gap <= 0.0 {
                return Err(DegenerateGap { gap });
            }
            let s_star = p.desired_gap(speed, speed - l.speed);
            (s_star / gap).powi(2)
        }
    };
    Ok(p.max_accel * (free - interaction))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Behavior {
    /// Car-following; `leader` indexes into the same vehicle slice.
    Idm {
        leader: Option<usize>,
    },
    ConstantVelocity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimVehicle {
    pub pos: f64,
    pub speed: f64,
    pub length: f64,
    pub params: IdmParams,
    pub behavior: Behavior,
}

impl SimVehicle {
    fn leader(&self) -> Option<usize> {
        match self.behavior {
            Behavior::Idm { leader } => leader,
            Behavior::ConstantVelocity => None,
        }
    }

    fn as_leader(&self) -> Leader {
        Leader {
            pos: self.pos,
            speed: self.speed,
            length: self.length,
        }
    }
}

/// Leaders before followers.
fn leader_first_order(vehicles: &[SimVehicle]) -> Vec<usize> {
    let depth = |mut i: usize| {
        let mut d = 0usize;
        while let Some(l) = vehicles[i].leader() {
            d += 1;
            i = l;
            assert!(d <= vehicles.len(), "leader graph contains a cycle");
        }
        d
    };
    let mut order: Vec<usize> = (0..vehicles.len()).collect();
    order.sort_by_key(|&i| (depth(i), i));
    order
}

/// Pulls `follower` back so that it sits [`MIN_GAP`] behind `leader` and is not
/// faster than it.
fn clamp_to_leader(follower: &mut SimVehicle, leader: &SimVehicle) {
    let limit = leader.pos - leader.length - MIN_GAP;
    if follower.pos > limit {
        follower.pos = limit;
        follower.speed = follower.speed.min(leader.speed);
    }
}

/// One semi-implicit Euler step of all vehicles: accelerations are evaluated
/// on the current state, then `v ← max(0, v + a·dt)`, `x ← x + v·dt`.
pub fn step_scene(vehicles: &[SimVehicle], dt: f64) -> Vec<SimVehicle> {
    assert!(dt > 0.0, "time step must be positive");
    let order = leader_first_order(vehicles);

    let mut current = vehicles.to_vec();
    for &i in &order {
        if let Some(l) = current[i].leader() {
            let leader = current[l];
            if leader.pos - leader.length - current[i].pos <= 0.0 {
                current[i].speed = leader.speed;
                current[i].pos = leader.pos - leader.length - MIN_GAP;
            }
        }
    }

    let mut next = current.clone();
    for (i, v) in current.iter().enumerate() {
        match v.behavior {
            Behavior::ConstantVelocity => {
                next[i].pos = v.pos + v.speed * dt;
            }
            Behavior::Idm { leader } => {
                let accel = idm_accel(v.pos, v.speed, leader.map(|l| current[l].as_leader()), &v.params)
                    .expect("gaps were clamped above");
                let speed = (v.speed + accel * dt).max(0.0);
                next[i].speed = speed;
                next[i].pos = v.pos + speed * dt;
            }
        }
    }

    for &i in &order {
        if let Some(l) = next[i].leader() {
            let leader = next[l];
            clamp_to_leader(&mut next[i], &leader);
        }
    }
    next
}

/// Predicted contexts at offsets `1..=steps` (0.1 s apart).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedScene {
    pub contexts: Vec<NeighborContext>,
}

impl PredictedScene {
    pub fn gaps(&self) -> Vec<Gaps> {
        self.contexts.iter().map(|c| c.gaps).collect()
    }
}

/// Rolls the five decision-relevant vehicles forward with a frozen leader
/// graph: EGO→PV, RV→EGO, PFV→PLV, and PV / PLV behind their observed leaders,
/// which keep their current speed.
pub fn rollout(obs: &Observation, cfg: &IdmConfig, steps: usize) -> PredictedScene {
    let ctx = &obs.context;
    let mut frames: Vec<TrajectoryFrame> = Vec::with_capacity(7);
    let mut vehicles: Vec<SimVehicle> = Vec::with_capacity(7);
    let mut push = |f: &TrajectoryFrame, behavior: Behavior| {
        frames.push(*f);
        vehicles.push(SimVehicle {
            pos: f.longitudinal_pos,
            speed: f.speed,
            length: f.length,
            params: cfg.params_for(f.speed),
            behavior,
        });
        vehicles.len() - 1
    };

    // placeholders for leaders are patched once every index is known
    let ego = push(&ctx.ego, Behavior::Idm { leader: None });
    let mut role_idx = [None; 4];
    for role in Role::ALL {
        if let Some(f) = ctx.neighbor(role) {
            role_idx[role.index()] = Some(push(f, Behavior::Idm { leader: None }));
        }
    }
    let pv_leader = obs.pv_leader.as_ref().map(|f| push(f, Behavior::ConstantVelocity));
    let plv_leader = obs.plv_leader.as_ref().map(|f| push(f, Behavior::ConstantVelocity));

    let pv = role_idx[Role::Pv.index()];
    let rv = role_idx[Role::Rv.index()];
    let plv = role_idx[Role::Plv.index()];
    let pfv = role_idx[Role::Pfv.index()];
    let mut set_leader = |follower: Option<usize>, leader: Option<usize>| {
        if let Some(f) = follower {
            vehicles[f].behavior = Behavior::Idm { leader };
        }
    };
    set_leader(Some(ego), pv);
    set_leader(rv, Some(ego));
    set_leader(pfv, plv);
    set_leader(pv, pv.and(pv_leader));
    set_leader(plv, plv.and(plv_leader));

    let mut contexts = Vec::with_capacity(steps);
    for k in 1..=steps {
        vehicles = step_scene(&vehicles, FRAME_DT);
        let at = |i: usize| TrajectoryFrame {
            frame_id: ctx.frame_id + k as i64,
            longitudinal_pos: vehicles[i].pos,
            speed: vehicles[i].speed,
            ..frames[i]
        };
        let neighbors = role_idx.map(|idx| idx.map(at));
        contexts.push(NeighborContext::from_frames(
            at(ego),
            ctx.target_side,
            ctx.target_lane,
            neighbors,
        ));
    }
    PredictedScene { contexts }
}

/// A source of future neighbour gaps for the online classifier and the IDM
/// baseline.
pub trait Predictor {
    /// Gaps at offsets `1..=steps` after the observation.
    fn predict(&self, obs: &Observation, steps: usize) -> Vec<Gaps>;
}

impl Predictor for IdmConfig {
    fn predict(&self, obs: &Observation, steps: usize) -> Vec<Gaps> {
        rollout(obs, self, steps).gaps()
    }
}
