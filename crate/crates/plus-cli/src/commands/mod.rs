//! One module per subcommand.

pub mod env;
pub mod simulate;
pub mod sweep;
pub mod sysid;
pub mod wavelength;

use plus_core::powerline::{CatenarySpec, PowerlineProfile};

use crate::config::LoadedConfig;
use crate::CliError;

/// The configured uniform powerline.
pub(crate) fn configured_profile(loaded: &LoadedConfig) -> Result<(CatenarySpec, PowerlineProfile), CliError> {
    let p = &loaded.config.powerline;
    let span = CatenarySpec::from_sag(p.span_length, p.sag_fraction, p.tower_height)
        .map_err(|e| CliError::Config(loaded.error("powerline", e.to_string())))?;
    let profile = PowerlineProfile::uniform(span, p.spans)
        .map_err(|e| CliError::Config(loaded.error("powerline.spans", e.to_string())))?;
    Ok((span, profile))
}

/// Registers and writes `name` in the output directory, mapping I/O
/// failures to runtime errors.
pub(crate) fn emit(
    ctx: &mut crate::Context,
    name: &str,
    write: impl FnOnce(&std::path::Path) -> anyhow::Result<()>,
) -> Result<std::path::PathBuf, CliError> {
    ctx.out.write(name, write).map_err(CliError::Runtime)
}
