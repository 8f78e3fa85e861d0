//! Robust kernel canonical correlation analysis.
//!
//! The crate estimates kernel mean elements, kernel covariance and
//! cross-covariance operators, and kernel CCA, each in a standard and a
//! robust (M-estimation) variant. The robust variants are fitted with
//! kernelized iteratively re-weighted least squares (KIRWLS). It also
//! computes influence functions of kernel CCA for outlier detection, and
//! ships the synthetic benchmarks used to compare the two variants.
//!
//! Modules:
//!
//! * [`loss`]: Huber, Hampel and Tukey losses and their weight functions.
//! * [`kernel`]: kernels, Gram matrices, weighted centering.
//! * [`robust_mean`], [`robust_cov`]: KIRWLS estimators.
//! * [`kcca`]: standard and robust kernel CCA.
//! * [`influence`]: influence functions and the outlier rule.
//! * [`synth`]: seeded data generators.
//! * [`bench`]: sensitivity metrics and the experiment tables.
//!
//! ```
//! use rkcca::kcca::{fit_standard_kcca, KccaOptions};
//! use rkcca::kernel::{gram, KernelSpec};
//! use rkcca::synth::{gen_mgsd, Contamination, MgsdSigma};
//!
//! let data = gen_mgsd(100, Contamination::None, 7, &MgsdSigma::default()).unwrap();
//! let y = data.y.as_ref().unwrap();
//! let kx = gram(&KernelSpec::gaussian(2.0), &data.x).unwrap();
//! let ky = gram(&KernelSpec::gaussian(2.0), y).unwrap();
//! let model = fit_standard_kcca(&kx, &ky, &KccaOptions::default()).unwrap();
//! assert!(model.rho[0] > 0.0 && model.rho[0] <= 1.0);
//! ```

pub mod bench;
pub mod error;
pub mod influence;
pub mod kcca;
pub mod kernel;
mod kirwls;
mod linalg;
pub mod loss;
pub mod robust_cov;
pub mod robust_mean;
pub mod synth;

pub use error::{Error, Result};
pub use kirwls::KirwlsOptions;
pub use linalg::pearson;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/losses.md")]
    pub struct Losses;
    #[doc = include_str!("../../../book/src/kernels.md")]
    pub struct Kernels;
    #[doc = include_str!("../../../book/src/kirwls.md")]
    pub struct Kirwls;
    #[doc = include_str!("../../../book/src/kcca.md")]
    pub struct Kcca;
    #[doc = include_str!("../../../book/src/influence.md")]
    pub struct Influence;
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub struct Experiments;
}
