//! Newtonian point-mass dynamics with a fixed-step classical Runge-Kutta
//! integrator. Massive bodies attract each other; the probe is a test
//! particle that feels them but exerts no force.

use crate::{PhysicsError, Vec3};

/// Gravitational constant, SI units.
pub const G: f64 = 6.674e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    /// kg; ignored for the probe.
    pub mass: f64,
    /// m
    pub position: Vec3,
    /// m/s
    pub velocity: Vec3,
}

impl BodyState {
    pub fn new(mass: f64, position: Vec3, velocity: Vec3) -> Self {
        Self {
            mass,
            position,
            velocity,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub time: f64,
    pub probe_position: Vec3,
    pub probe_velocity: Vec3,
    pub body_positions: Vec<Vec3>,
}

/// Minimum probe distance to one body over all recorded steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approach {
    pub body: usize,
    pub distance: f64,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// One entry per massive body, in input order.
    pub approaches: Vec<Approach>,
    pub final_bodies: Vec<BodyState>,
    pub final_probe: BodyState,
}

impl Trajectory {
    /// Closest approach over all bodies.
    pub fn closest_approach(&self) -> Option<Approach> {
        self.approaches
            .iter()
            .copied()
            .min_by(|a, b| a.distance.total_cmp(&b.distance))
    }
}

#[derive(Clone)]
struct State {
    pos: Vec<Vec3>,
    vel: Vec<Vec3>,
}

/// Index `masses.len()` is the probe.
fn accelerations(masses: &[f64], pos: &[Vec3]) -> Vec<Vec3> {
    let n = masses.len();
    let mut acc = vec![Vec3::ZERO; pos.len()];
    for i in 0..pos.len() {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = pos[j] - pos[i];
            let r2 = d.norm_sq();
            acc[i] += d * (G * masses[j] / (r2 * r2.sqrt()));
        }
    }
    acc
}

fn rk4_step(masses: &[f64], s: &State, h: f64) -> State {
    let axpy = |base: &[Vec3], k: &[Vec3], f: f64| -> Vec<Vec3> {
        base.iter().zip(k).map(|(&b, &d)| b + d * f).collect()
    };
    let k1v = accelerations(masses, &s.pos);
    let k1x = s.vel.clone();

    let p2 = axpy(&s.pos, &k1x, h / 2.0);
    let v2 = axpy(&s.vel, &k1v, h / 2.0);
    let k2v = accelerations(masses, &p2);
    let k2x = v2;

    let p3 = axpy(&s.pos, &k2x, h / 2.0);
    let v3 = axpy(&s.vel, &k2v, h / 2.0);
    let k3v = accelerations(masses, &p3);
    let k3x = v3;

    let p4 = axpy(&s.pos, &k3x, h);
    let v4 = axpy(&s.vel, &k3v, h);
    let k4v = accelerations(masses, &p4);
    let k4x = v4;

    let combine = |base: &[Vec3], a: &[Vec3], b: &[Vec3], c: &[Vec3], d: &[Vec3]| {
        (0..base.len())
            .map(|i| base[i] + (a[i] + b[i] * 2.0 + c[i] * 2.0 + d[i]) * (h / 6.0))
            .collect::<Vec<_>>()
    };
    State {
        pos: combine(&s.pos, &k1x, &k2x, &k3x, &k4x),
        vel: combine(&s.vel, &k1v, &k2v, &k3v, &k4v),
    }
}

/// Integrates the massive bodies together with a massless probe from t = 0
/// to `t_end`, recording every step. The last step is shortened so the run
/// ends exactly at `t_end`.
pub fn simulate_trajectory(
    bodies: &[BodyState],
    probe: BodyState,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory, PhysicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(PhysicsError::InvalidStep(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= dt && t_end.is_finite()) {
        return Err(PhysicsError::InvalidStep(format!(
            "t_end ({t_end}) must be at least dt ({dt})"
        )));
    }
    for (i, a) in bodies.iter().enumerate() {
        if !(a.mass > 0.0) {
            return Err(PhysicsError::InvalidStep(format!("body {i} has non-positive mass")));
        }
        for (j, b) in bodies.iter().enumerate().skip(i + 1) {
            if a.position == b.position {
                return Err(PhysicsError::CoincidentBodies(i, j));
            }
        }
    }

    let masses: Vec<f64> = bodies.iter().map(|b| b.mass).collect();
    let n = bodies.len();
    let mut state = State {
        pos: bodies.iter().map(|b| b.position).chain([probe.position]).collect(),
        vel: bodies.iter().map(|b| b.velocity).chain([probe.velocity]).collect(),
    };

    let mut approaches: Vec<Approach> = (0..n)
        .map(|i| Approach {
            body: i,
            distance: f64::INFINITY,
            time: 0.0,
        })
        .collect();
    let mut samples = Vec::new();
    let mut record = |t: f64, s: &State, approaches: &mut Vec<Approach>| {
        for (i, a) in approaches.iter_mut().enumerate() {
            let d = (s.pos[n] - s.pos[i]).norm();
            if d < a.distance {
                a.distance = d;
                a.time = t;
            }
        }
        samples.push(TrajectorySample {
            time: t,
            probe_position: s.pos[n],
            probe_velocity: s.vel[n],
            body_positions: s.pos[..n].to_vec(),
        });
    };

    let mut t = 0.0;
    record(t, &state, &mut approaches);
    let steps = (t_end / dt).ceil() as u64;
    for k in 1..=steps {
        let target = (k as f64 * dt).min(t_end);
        let h = target - t;
        if h <= 0.0 {
            break;
        }
        state = rk4_step(&masses, &state, h);
        t = target;
        if !state.pos.iter().chain(&state.vel).all(|v| v.is_finite()) {
            return Err(PhysicsError::NumericalBlowup { time: t });
        }
        record(t, &state, &mut approaches);
    }

    let final_bodies = bodies
        .iter()
        .enumerate()
        .map(|(i, b)| BodyState::new(b.mass, state.pos[i], state.vel[i]))
        .collect();
    Ok(Trajectory {
        samples,
        approaches,
        final_bodies,
        final_probe: BodyState::new(probe.mass, state.pos[n], state.vel[n]),
    })
}

/// Kinetic plus pairwise potential energy of the massive bodies, J.
pub fn system_energy(bodies: &[BodyState]) -> f64 {
    let mut e = 0.0;
    for (i, a) in bodies.iter().enumerate() {
        e += 0.5 * a.mass * a.velocity.norm_sq();
        for b in &bodies[i + 1..] {
            e -= G * a.mass * b.mass / (a.position - b.position).norm();
        }
    }
    e
}

/// Energy per unit mass of a test particle in the bodies' field, J/kg.
pub fn probe_specific_energy(bodies: &[BodyState], probe: &BodyState) -> f64 {
    let potential: f64 = bodies
        .iter()
        .map(|b| -G * b.mass / (probe.position - b.position).norm())
        .sum();
    0.5 * probe.velocity.norm_sq() + potential
}

/// Angular momentum per unit mass of the probe about `center`, m²/s.
pub fn probe_specific_angular_momentum(probe: &BodyState, center: Vec3) -> Vec3 {
    (probe.position - center).cross(probe.velocity)
}

/// Speed of a circular orbit of radius `r` around a point mass.
pub fn circular_speed(central_mass: f64, r: f64) -> f64 {
    (G * central_mass / r).sqrt()
}

const SOLAR_SYSTEM_CSV: &str = include_str!("../data/solar_system.csv");

/// Sun and planets on coplanar circular orbits, all starting on the +x
/// axis. Returns `(name, state)` in table order; the Sun sits at the origin.
pub fn solar_system() -> Result<Vec<(String, BodyState)>, PhysicsError> {
    parse_body_table(SOLAR_SYSTEM_CSV)
}

pub fn parse_body_table(csv: &str) -> Result<Vec<(String, BodyState)>, PhysicsError> {
    let mut rows = Vec::new();
    for (line_no, line) in csv.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(PhysicsError::BodyTable(format!(
                "line {}: expected 3 fields",
                line_no + 1
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| PhysicsError::BodyTable(format!("line {}: bad number {s:?}", line_no + 1)))
        };
        rows.push((fields[0].to_string(), num(fields[1])?, num(fields[2])?));
    }
    let central = rows
        .iter()
        .find(|r| r.2 == 0.0)
        .map(|r| r.1)
        .ok_or_else(|| PhysicsError::BodyTable("no central body with radius 0".into()))?;
    Ok(rows
        .into_iter()
        .map(|(name, mass, r)| {
            let state = if r == 0.0 {
                BodyState::new(mass, Vec3::ZERO, Vec3::ZERO)
            } else {
                BodyState::new(
                    mass,
                    Vec3::new(r, 0.0, 0.0),
                    Vec3::new(0.0, circular_speed(central, r), 0.0),
                )
            };
            (name, state)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const M_SUN: f64 = 1.989e30;
    const AU: f64 = 1.496e11;

    #[test]
    fn rejects_bad_steps_and_coincident_bodies() {
        let sun = BodyState::new(M_SUN, Vec3::ZERO, Vec3::ZERO);
        let probe = BodyState::new(0.0, Vec3::new(AU, 0.0, 0.0), Vec3::ZERO);
        assert!(simulate_trajectory(&[sun], probe, 0.0, 1.0).is_err());
        assert!(simulate_trajectory(&[sun], probe, 10.0, 1.0).is_err());
        assert_eq!(
            simulate_trajectory(&[sun, sun], probe, 1.0, 1.0).unwrap_err(),
            PhysicsError::CoincidentBodies(0, 1)
        );
    }

    #[test]
    fn single_step_from_rest_falls_inward() {
        let sun = BodyState::new(M_SUN, Vec3::ZERO, Vec3::ZERO);
        let probe = BodyState::new(0.0, Vec3::new(10.0 * AU, 0.0, 0.0), Vec3::ZERO);
        let dt = 86_400.0;
        let traj = simulate_trajectory(&[sun], probe, dt, dt).unwrap();
        assert_eq!(traj.samples.len(), 2);
        let last = traj.samples.last().unwrap();
        assert!(last.probe_position.x < 10.0 * AU);
        assert!(last.probe_velocity.x < 0.0);
        let a = traj.closest_approach().unwrap();
        assert_eq!(a.time, dt);
        assert_eq!(a.distance, last.probe_position.norm());
    }

    #[test]
    fn solar_table_loads() {
        let bodies = solar_system().unwrap();
        assert_eq!(bodies.len(), 9);
        assert_eq!(bodies[0].0, "Sun");
        let earth = &bodies[3].1;
        // ~29.8 km/s
        assert!((earth.velocity.y - 29_780.0).abs() < 100.0);
    }

    #[test]
    fn malformed_table_rejected() {
        assert!(parse_body_table("name,mass,r\nA,1\n").is_err());
        assert!(parse_body_table("name,mass,r\nA,1,5\n").is_err());
    }
}
