// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::codec::Digest;
use crate::ledger::{MAX_ASSET_NAME_BYTES, MAX_URL_BYTES};

/// Off-ledger record of one chip. The ledger only stores its digest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChipPassport {
    pub chip_serial: String,
    pub chip_type: String,
    pub manufacturer_of_chip: String,
    /// ISO date, `YYYY-MM-DD`.
    pub manufacture_date: String,
    pub months_in_service: u32,
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PassportError {
    #[error("{field} must not contain line breaks")]
    LineBreak { field: &'static str },
    #[error("chip serial must be 1..={MAX_ASSET_NAME_BYTES} bytes")]
    Serial,
    #[error("url longer than {MAX_URL_BYTES} bytes")]
    Url,
    #[error("manufacture date {0:?} is not an ISO date")]
    Date(String),
}

impl ChipPassport {
    fn text_fields(&self) -> [(&'static str, &str); 5] {
        [
            ("chip_serial", &self.chip_serial),
            ("chip_type", &self.chip_type),
            ("manufacturer_of_chip", &self.manufacturer_of_chip),
            ("manufacture_date", &self.manufacture_date),
            ("url", &self.url),
        ]
    }

    pub fn validate(&self) -> Result<(), PassportError> {
        for (field, value) in self.text_fields() {
            if value.contains(['\n', '\r']) {
                return Err(PassportError::LineBreak { field });
            }
        }
        if self.chip_serial.is_empty() || self.chip_serial.len() > MAX_ASSET_NAME_BYTES {
            return Err(PassportError::Serial);
        }
        if self.url.len() > MAX_URL_BYTES {
            return Err(PassportError::Url);
        }
        NaiveDate::parse_from_str(&self.manufacture_date, "%Y-%m-%d")
            .map_err(|_| PassportError::Date(self.manufacture_date.clone()))?;
        Ok(())
    }

    /// `key=value` lines in field order, UTF-8, newline separated.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "chip_serial={}", self.chip_serial);
        let _ = writeln!(s, "chip_type={}", self.chip_type);
        let _ = writeln!(s, "manufacturer_of_chip={}", self.manufacturer_of_chip);
        let _ = writeln!(s, "manufacture_date={}", self.manufacture_date);
        let _ = writeln!(s, "months_in_service={}", self.months_in_service);
        let _ = write!(s, "url={}", self.url);
        s
    }

    pub fn metadata_hash(&self) -> Digest {
        Digest::of(self.canonical_text().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> ChipPassport {
        ChipPassport {
            chip_serial: "SN-0001".into(),
            chip_type: "DRAM".into(),
            manufacturer_of_chip: "ChipCo".into(),
            manufacture_date: "2021-03-04".into(),
            months_in_service: 36,
            url: "https://passports.example/SN-0001".into(),
        }
    }

    #[test]
    fn canonical_text_layout() {
        assert_eq!(
            sample().canonical_text(),
            "chip_serial=SN-0001\nchip_type=DRAM\nmanufacturer_of_chip=ChipCo\n\
             manufacture_date=2021-03-04\nmonths_in_service=36\nurl=https://passports.example/SN-0001"
        );
    }

    #[test]
    fn validation() {
        assert!(sample().validate().is_ok());
        let mut p = sample();
        p.chip_type = "DR\nAM".into();
        assert_eq!(
            p.validate(),
            Err(PassportError::LineBreak { field: "chip_type" })
        );
        let mut p = sample();
        p.manufacture_date = "2021-13-01".into();
        assert!(matches!(p.validate(), Err(PassportError::Date(_))));
        let mut p = sample();
        p.chip_serial.clear();
        assert_eq!(p.validate(), Err(PassportError::Serial));
    }

    #[test]
    fn distinct_serials_distinct_hashes() {
        let a = sample();
        let mut b = sample();
        b.chip_serial = "SN-0002".into();
        assert_ne!(a.metadata_hash(), b.metadata_hash());
        assert_eq!(a.metadata_hash(), sample().metadata_hash());
    }
}
