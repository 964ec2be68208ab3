//! Launch directions on the unit sphere.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::Vec3;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Fibonacci-lattice direction set with antipodal symmetry: a Fibonacci
/// spiral over the upper hemisphere and its point reflection. Seed 0 keeps
/// the lattice axis on z, any other seed applies a random rotation.
#[derive(Clone, Debug)]
pub struct DirectionSet {
    m: usize,
    half: usize,
    rotation: Matrix3<f64>,
}

impl DirectionSet {
    pub fn new(m: usize, seed: u64) -> DirectionSet {
        let half = m.div_ceil(2).max(1);
        let rotation = if seed == 0 {
            Matrix3::identity()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut q = [0.0f64; 4];
            for c in q.iter_mut() {
                *c = StandardNormal.sample(&mut rng);
            }
            UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]))
                .to_rotation_matrix()
                .into_inner()
        };
        DirectionSet { m, half, rotation }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Direction `i` of the set, computed on demand.
    pub fn get(&self, i: usize) -> Vec3 {
        let (j, sign) = if i < self.half { (i, 1.0) } else { (i - self.half, -1.0) };
        let z = 1.0 - (j as f64 + 0.5) / self.half as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let (s, c) = (GOLDEN_ANGLE * j as f64).sin_cos();
        self.rotation * (Vec3::new(r * c, r * s, z) * sign)
    }

    /// Mean angular spacing sqrt(4π/M) of the set.
    pub fn spacing(&self) -> f64 {
        (4.0 * std::f64::consts::PI / self.m.max(1) as f64).sqrt()
    }
}

/// All `m` directions of [`DirectionSet::new`].
pub fn generate_directions(m: usize, seed: u64) -> Vec<Vec3> {
    let set = DirectionSet::new(m, seed);
    (0..m).map(|i| set.get(i)).collect()
}
