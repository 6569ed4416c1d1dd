//! Genus-2 Kleinian functions, period data and the Abel map through Richelot isogeny towers.

pub mod abel;
pub mod cli;
pub mod cpoly;
pub mod disks;
pub mod error;
pub mod kleinian;
pub mod periods;
pub mod quad;
pub mod richelot;
pub mod thetaref;

pub use cpoly::{CPoly, Moebius, SpherePoint, C64};
pub use disks::{Disk, DiskTriple};
pub use error::{Error, Result};
