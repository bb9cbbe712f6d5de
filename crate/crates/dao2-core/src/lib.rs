//! Threshold-controlled DAO-to-DAO payments over secp256k1.
//!
//! One organization holding a `t1`-of-`n1` signing key pays another whose
//! wallet lineage is held `t2`-of-`n2`, optionally through an unlinkable
//! one-time destination, and the receiver redeems without any party ever
//! reconstructing a master secret. The building blocks:
//!
//! - [`group`]: scalar and point arithmetic with canonical encodings.
//! - [`sharing`]: Shamir sharing, Lagrange reconstruction, Feldman DKG.
//! - [`dkd`]: epoch-based distributed key derivation (HMAC offsets).
//! - [`dsag`]: distributed stealth-address generation and detection.
//! - [`tsig`]: two-round threshold Schnorr signing.
//! - [`wire`]: canonical byte layouts and per-session byte accounting.
//! - [`protocol`]: the deterministic two-DAO simulator, fault harness,
//!   ledger, and erasure audit hooks.

pub mod dkd;
pub mod dsag;
pub mod error;
pub mod group;
pub mod protocol;
pub mod sharing;
pub mod tsig;
pub mod wire;

pub use error::{Error, Result};
pub use group::{hash_to_scalar, GroupPoint, Scalar};
pub use sharing::{PartyIndex, Share, ShareSet};
