use crate::gmm::{linalg, Gmm};
use crate::scalar::Scalar;

/// Pose of the agent whose perspective defines the body frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObserverPose<T> {
    position: [T; 2],
    heading: T,
}

impl<T: Scalar> ObserverPose<T> {
    /// `heading` is radians counter-clockwise from world +x; it is wrapped
    /// into `(−π, π]`.
    pub fn new(position: [T; 2], heading: T) -> Self {
        Self {
            position,
            heading: wrap_angle(heading),
        }
    }

    pub fn position(&self) -> [T; 2] {
        self.position
    }

    pub fn heading(&self) -> T {
        self.heading
    }

    /// World point to `(longitudinal, lateral)` body coordinates; lateral is
    /// positive to the observer's left.
    pub fn to_body(&self, point: &[T; 2]) -> [T; 2] {
        let r = linalg::rotation(-self.heading);
        linalg::mat_vec(&r, &linalg::sub(point, &self.position))
    }

    /// The belief expressed in body coordinates.
    pub fn belief_to_body(&self, belief: &Gmm<T, 2>) -> Gmm<T, 2> {
        let r = linalg::rotation(-self.heading);
        let t = linalg::mat_vec(&r, &self.position);
        belief.rigid_transform(-self.heading, [-t[0], -t[1]])
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle<T: Scalar>(angle: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut a = angle - two_pi * ((angle + T::PI()) / two_pi).floor();
    if a <= -T::PI() {
        a = a + two_pi;
    }
    a
}

#[derive(Clone, Debug, PartialEq)]
pub struct BodyFrameMarginals<T: Scalar> {
    pub lateral: Gmm<T, 1>,
    pub longitudinal: Gmm<T, 1>,
}

/// Rotates `belief` into the observer's frame and marginalizes onto the
/// heading axis (longitudinal) and its left normal (lateral).
pub fn body_frame_decompose<T: Scalar>(
    belief: &Gmm<T, 2>,
    observer: &ObserverPose<T>,
) -> BodyFrameMarginals<T> {
    let body = observer.belief_to_body(belief);
    let longitudinal = body
        .marginal_along([T::one(), T::zero()])
        .expect("unit axis");
    let lateral = body
        .marginal_along([T::zero(), T::one()])
        .expect("unit axis");
    BodyFrameMarginals {
        lateral,
        longitudinal,
    }
}
