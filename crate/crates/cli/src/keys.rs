//! Key files: an unencrypted JSON record of one Ed25519 key.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use fundchain_core::{Address, KeyPair, PublicKey};

use crate::client::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyFile {
    pub address: Address,
    pub public_key: PublicKey,
    /// `0x` + 64 hex digits.
    pub secret_key: String,
}

impl KeyFile {
    pub fn from_keypair(kp: &KeyPair) -> Self {
        Self {
            address: kp.address(),
            public_key: kp.public_key(),
            secret_key: format!("0x{}", hex::encode(kp.secret_bytes())),
        }
    }

    pub fn keypair(&self) -> Result<KeyPair, CliError> {
        let raw = self
            .secret_key
            .strip_prefix("0x")
            .unwrap_or(&self.secret_key);
        let bytes: [u8; 32] = hex::decode(raw)
            .ok()
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| CliError::Usage("key file: secret_key must be 32 hex bytes".into()))?;
        let kp = KeyPair::from_secret(bytes);
        if kp.address() != self.address || kp.public_key() != self.public_key {
            return Err(CliError::Usage(
                "key file: address or public key does not match the secret key".into(),
            ));
        }
        Ok(kp)
    }
}

pub fn load(path: &Path) -> Result<KeyPair, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!(
            "cannot read key file {}: {e} (create one with `fundchain keygen`)",
            path.display()
        ))
    })?;
    let file: KeyFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("key file {}: {e}", path.display())))?;
    file.keypair()
}

/// Writes the key with owner-only permissions. Refuses to overwrite unless
/// `force` is set.
pub fn save(path: &Path, kp: &KeyPair, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} already exists (use --force to overwrite)",
            path.display()
        )));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let json = serde_json::to_string_pretty(&KeyFile::from_keypair(kp)).expect("key serializes");
    fs::write(path, json + "\n")?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(path, fs::Permissions::from_mode(0o600))?;
    }
    Ok(())
}
