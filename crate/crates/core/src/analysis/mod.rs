//! Static metrics, duplicate detection and group pictures.

mod group;
mod metrics;

pub use group::{group_picture, render_skeleton, GroupMember, GroupPicture, DEFAULT_THRESHOLD};
pub use metrics::{compute_metrics, compute_metrics_tokens, Halstead, MetricsReport};

use crate::extract::strip_comments;
use crate::model::sha256_hex;

/// Name of the digest used for content hashes and fingerprints.
pub const HASH_ALGORITHM: &str = "sha256";

/// Digest of the source with comments removed and whitespace runs collapsed.
pub fn content_hash(source: &str) -> String {
    let stripped = strip_comments(source);
    let normalized = stripped.split_whitespace().collect::<Vec<_>>().join(" ");
    sha256_hex(normalized.as_bytes())
}
