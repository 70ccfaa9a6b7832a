//! Frictionless equations of motion for a cart carrying one or two inverted
//! pendulum links, advanced with classical fixed-step RK4.
//!
//! Conventions shared by both mechanisms:
//! - `x` grows to the right, the only actuated input is a horizontal force on
//!   the cart.
//! - Link angles are measured from upright, positive counterclockwise, so a
//!   positive angle tilts the link to the left of the pivot. Angles are never
//!   wrapped.
//! - Every link is a massless rod with its point mass at the far end, which
//!   makes the pole length the effective pendulum length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of a cart-mounted pendulum. For the double pendulum
/// `pole_mass` and `pole_length` describe each of the two identical links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismParams {
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub pole_length: f64,
    pub gravity: f64,
    pub dt: f64,
    pub force_limit: f64,
}

impl MechanismParams {
    pub const FORCE_LIMIT: f64 = 10.0;

    pub fn cart_pole() -> Self {
        Self {
            cart_mass: 1.0,
            pole_mass: 0.1,
            pole_length: 0.6,
            gravity: 9.81,
            dt: 0.01,
            force_limit: Self::FORCE_LIMIT,
        }
    }

    pub fn double_cart_pole() -> Self {
        Self::cart_pole()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cart_mass", self.cart_mass),
            ("pole_mass", self.pole_mass),
            ("pole_length", self.pole_length),
            ("gravity", self.gravity),
            ("dt", self.dt),
            ("force_limit", self.force_limit),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Domain(format!(
                    "mechanism parameter {name} must be finite and positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for MechanismParams {
    fn default() -> Self {
        Self::cart_pole()
    }
}

/// Fixed-size state vector arithmetic needed by the integrator.
pub trait StateVector: Copy {
    const DIM: usize;

    fn to_vec(&self) -> Vec<f64>;

    /// `self + k * d`, component-wise.
    fn add_scaled(&self, k: f64, d: &Self) -> Self;

    fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }

    /// Reflection through the cart axis: positions, angles and their rates
    /// all change sign.
    fn mirrored(&self) -> Self {
        self.add_scaled(-2.0, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn new(x: f64, x_dot: f64, theta: f64, theta_dot: f64) -> Self {
        Self {
            x,
            x_dot,
            theta,
            theta_dot,
        }
    }
}

impl StateVector for CartPoleState {
    const DIM: usize = 4;

    fn to_vec(&self) -> Vec<f64> {
        vec![self.x, self.x_dot, self.theta, self.theta_dot]
    }

    fn add_scaled(&self, k: f64, d: &Self) -> Self {
        Self {
            x: self.x + k * d.x,
            x_dot: self.x_dot + k * d.x_dot,
            theta: self.theta + k * d.theta,
            theta_dot: self.theta_dot + k * d.theta_dot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DoubleCartPoleState {
    pub x: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub x_dot: f64,
    pub theta1_dot: f64,
    pub theta2_dot: f64,
}

impl StateVector for DoubleCartPoleState {
    const DIM: usize = 6;

    fn to_vec(&self) -> Vec<f64> {
        vec![
            self.x,
            self.theta1,
            self.theta2,
            self.x_dot,
            self.theta1_dot,
            self.theta2_dot,
        ]
    }

    fn add_scaled(&self, k: f64, d: &Self) -> Self {
        Self {
            x: self.x + k * d.x,
            theta1: self.theta1 + k * d.theta1,
            theta2: self.theta2 + k * d.theta2,
            x_dot: self.x_dot + k * d.x_dot,
            theta1_dot: self.theta1_dot + k * d.theta1_dot,
            theta2_dot: self.theta2_dot + k * d.theta2_dot,
        }
    }
}

fn check_inputs<S: StateVector>(s: &S, force: f64, p: &MechanismParams) -> Result<()> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("non-finite state {:?}", s.to_vec())));
    }
    if !force.is_finite() {
        return Err(Error::Domain(format!("non-finite force {force}")));
    }
    if force.abs() > p.force_limit {
        return Err(Error::Domain(format!(
            "force {force} exceeds actuator limit {}",
            p.force_limit
        )));
    }
    Ok(())
}

/// Time derivative of the cart-pole state under a constant cart force.
pub fn cartpole_derivatives(
    s: &CartPoleState,
    force: f64,
    p: &MechanismParams,
) -> Result<CartPoleState> {
    check_inputs(s, force, p)?;
    let (m_cart, m, l, g) = (p.cart_mass, p.pole_mass, p.pole_length, p.gravity);
    let (sin, cos) = s.theta.sin_cos();

    // [M+m      -m l cos] [x_dd    ]   [F - m l sin theta_dot^2]
    // [-m l cos  m l^2  ] [theta_dd] = [m g l sin              ]
    let rhs_x = force - m * l * sin * s.theta_dot * s.theta_dot;
    let rhs_theta = m * g * l * sin;
    let det = m * l * l * (m_cart + m * sin * sin);
    let x_dd = (m * l * l * rhs_x + m * l * cos * rhs_theta) / det;
    let theta_dd = ((m_cart + m) * rhs_theta + m * l * cos * rhs_x) / det;

    Ok(CartPoleState {
        x: s.x_dot,
        x_dot: x_dd,
        theta: s.theta_dot,
        theta_dot: theta_dd,
    })
}

/// Kinetic plus potential energy, potential measured from the pivot height.
pub fn cartpole_energy(s: &CartPoleState, p: &MechanismParams) -> f64 {
    let (m_cart, m, l, g) = (p.cart_mass, p.pole_mass, p.pole_length, p.gravity);
    let (sin, cos) = s.theta.sin_cos();
    let bob_vx = s.x_dot - l * cos * s.theta_dot;
    let bob_vy = -l * sin * s.theta_dot;
    0.5 * m_cart * s.x_dot * s.x_dot
        + 0.5 * m * (bob_vx * bob_vx + bob_vy * bob_vy)
        + m * g * l * cos
}

/// Time derivative of the double cart-pole state. Accelerations come from
/// solving the 3x3 mass-matrix system at the current configuration.
pub fn double_derivatives(
    s: &DoubleCartPoleState,
    force: f64,
    p: &MechanismParams,
) -> Result<DoubleCartPoleState> {
    check_inputs(s, force, p)?;
    let (m0, m, l, g) = (p.cart_mass, p.pole_mass, p.pole_length, p.gravity);
    let (m1, m2, l1, l2) = (m, m, l, l);
    let (s1, c1) = s.theta1.sin_cos();
    let (s2, c2) = s.theta2.sin_cos();
    let (s12, c12) = (s.theta1 - s.theta2).sin_cos();
    let (w1, w2) = (s.theta1_dot, s.theta2_dot);

    let mass = [
        [m0 + m1 + m2, -(m1 + m2) * l1 * c1, -m2 * l2 * c2],
        [
            -(m1 + m2) * l1 * c1,
            (m1 + m2) * l1 * l1,
            m2 * l1 * l2 * c12,
        ],
        [-m2 * l2 * c2, m2 * l1 * l2 * c12, m2 * l2 * l2],
    ];
    let rhs = [
        force - (m1 + m2) * l1 * s1 * w1 * w1 - m2 * l2 * s2 * w2 * w2,
        -m2 * l1 * l2 * s12 * w2 * w2 + (m1 + m2) * g * l1 * s1,
        m2 * l1 * l2 * s12 * w1 * w1 + m2 * g * l2 * s2,
    ];
    let [x_dd, t1_dd, t2_dd] = solve3(mass, rhs)?;

    Ok(DoubleCartPoleState {
        x: s.x_dot,
        theta1: w1,
        theta2: w2,
        x_dot: x_dd,
        theta1_dot: t1_dd,
        theta2_dot: t2_dd,
    })
}

/// Kinetic plus potential energy of the double cart-pole.
pub fn double_energy(s: &DoubleCartPoleState, p: &MechanismParams) -> f64 {
    let (m0, m, l, g) = (p.cart_mass, p.pole_mass, p.pole_length, p.gravity);
    let (s1, c1) = s.theta1.sin_cos();
    let (s2, c2) = s.theta2.sin_cos();
    let v1x = s.x_dot - l * c1 * s.theta1_dot;
    let v1y = -l * s1 * s.theta1_dot;
    let v2x = v1x - l * c2 * s.theta2_dot;
    let v2y = v1y - l * s2 * s.theta2_dot;
    let kinetic =
        0.5 * m0 * s.x_dot * s.x_dot + 0.5 * m * (v1x * v1x + v1y * v1y + v2x * v2x + v2y * v2y);
    let potential = m * g * l * c1 + m * g * (l * c1 + l * c2);
    kinetic + potential
}

/// Height of the upper link's tip above the cart pivot.
pub fn double_tip_height(s: &DoubleCartPoleState, p: &MechanismParams) -> f64 {
    p.pole_length * (s.theta1.cos() + s.theta2.cos())
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() <= 1e-12 * scale {
            return Err(Error::Domain("singular mass matrix".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// A mechanism whose state can be advanced by the integrator.
pub trait Mechanism {
    type State: StateVector + std::fmt::Debug;

    fn params(&self) -> &MechanismParams;

    fn derivative(&self, s: &Self::State, force: f64) -> Result<Self::State>;

    fn energy(&self, s: &Self::State) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPole {
    pub params: MechanismParams,
}

impl CartPole {
    pub fn new(params: MechanismParams) -> Self {
        Self { params }
    }
}

impl Mechanism for CartPole {
    type State = CartPoleState;

    fn params(&self) -> &MechanismParams {
        &self.params
    }

    fn derivative(&self, s: &CartPoleState, force: f64) -> Result<CartPoleState> {
        cartpole_derivatives(s, force, &self.params)
    }

    fn energy(&self, s: &CartPoleState) -> f64 {
        cartpole_energy(s, &self.params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleCartPole {
    pub params: MechanismParams,
}

impl DoubleCartPole {
    pub fn new(params: MechanismParams) -> Self {
        Self { params }
    }
}

impl Mechanism for DoubleCartPole {
    type State = DoubleCartPoleState;

    fn params(&self) -> &MechanismParams {
        &self.params
    }

    fn derivative(&self, s: &DoubleCartPoleState, force: f64) -> Result<DoubleCartPoleState> {
        double_derivatives(s, force, &self.params)
    }

    fn energy(&self, s: &DoubleCartPoleState) -> f64 {
        double_energy(s, &self.params)
    }
}

/// Classical fourth-order Runge-Kutta step of length `params().dt`, holding
/// the force constant across the step.
pub fn rk4_step<M: Mechanism>(mech: &M, s: &M::State, force: f64) -> Result<M::State> {
    let dt = mech.params().dt;
    if !(dt > 0.0) {
        return Err(Error::Domain(format!(
            "integrator step must be positive, got {dt}"
        )));
    }
    let k1 = mech.derivative(s, force)?;
    let k2 = mech.derivative(&s.add_scaled(0.5 * dt, &k1), force)?;
    let k3 = mech.derivative(&s.add_scaled(0.5 * dt, &k2), force)?;
    let k4 = mech.derivative(&s.add_scaled(dt, &k3), force)?;
    Ok(s.add_scaled(dt / 6.0, &k1)
        .add_scaled(dt / 3.0, &k2)
        .add_scaled(dt / 3.0, &k3)
        .add_scaled(dt / 6.0, &k4))
}
