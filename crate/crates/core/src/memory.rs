//! Process-level peak resident memory, where the platform exposes it.
//!
//! On Linux the high-water mark is `VmHWM` in `/proc/self/status` and can be
//! reset by writing `5` to `/proc/self/clear_refs`. Elsewhere both calls are
//! no-ops returning `None`/`false`. Figures are approximate: they include the
//! allocator's retained pages and everything else the process holds.

/// Peak resident set size in bytes.
pub fn peak_rss_bytes() -> Option<u64> {
    status_field("VmHWM:")
}

/// Current resident set size in bytes.
pub fn current_rss_bytes() -> Option<u64> {
    status_field("VmRSS:")
}

/// Resets the peak to the current resident size. Returns whether it worked.
pub fn reset_peak() -> bool {
    std::fs::write("/proc/self/clear_refs", "5").is_ok()
}

fn status_field(key: &str) -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with(key))?;
    let kb: u64 = line[key.len()..]
        .trim()
        .trim_end_matches("kB")
        .trim()
        .parse()
        .ok()?;
    Some(kb * 1024)
}
