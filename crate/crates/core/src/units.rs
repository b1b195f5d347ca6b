//! Complex quantities tagged with their unit.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

macro_rules! complex_quantity {
    ($name:ident, $unit:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub Complex64);

        impl $name {
            pub fn new(re: f64, im: f64) -> Self {
                $name(Complex64::new(re, im))
            }

            pub fn re(&self) -> f64 {
                self.0.re
            }

            pub fn im(&self) -> f64 {
                self.0.im
            }

            pub fn magnitude(&self) -> f64 {
                self.0.norm()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "({} {:+}j) {}", self.0.re, self.0.im, $unit)
            }
        }
    };
}

complex_quantity!(ImpedanceOhm, "ohm");
complex_quantity!(ImpedancePu, "pu");
complex_quantity!(CurrentKa, "kA");
complex_quantity!(CurrentPu, "pu");
