//! The JSON chain-spec file:
//! `{"states": [...], "kernel": [[...]], "observable": [...], "stationary": [...]}`
//! with `stationary` optional.

use serde::{Deserialize, Serialize};

use crate::chain::{ChainBuilder, ChainModel};
use crate::config::Tolerances;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateLabel {
    Name(String),
    Index(i64),
}

impl std::fmt::Display for StateLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateLabel::Name(s) => f.write_str(s),
            StateLabel::Index(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub states: Vec<StateLabel>,
    pub kernel: Vec<Vec<f64>>,
    pub observable: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<Vec<f64>>,
}

impl ChainSpec {
    /// Parses spec text. JSON has no NaN or infinity literals, so every
    /// parsed number is finite; ragged rows are caught by [`ChainSpec::build`].
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chain spec serializes")
    }

    pub fn build(&self) -> Result<ChainModel> {
        self.build_with(Tolerances::default())
    }

    pub fn build_with(&self, tolerances: Tolerances) -> Result<ChainModel> {
        ChainBuilder::new(&self.kernel, &self.observable)
            .stationary(self.stationary.as_deref())
            .states(self.states.iter().map(|s| s.to_string()).collect())
            .tolerances(tolerances)
            .build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_labels_and_optional_law() {
        let spec = ChainSpec::parse(
            r#"{"states":["a",1],"kernel":[[0.7,0.3],[0.3,0.7]],"observable":[1,-1]}"#,
        )
        .unwrap();
        assert_eq!(spec.states[1], StateLabel::Index(1));
        let chain = spec.build().unwrap();
        assert_eq!(chain.states(), &["a".to_string(), "1".to_string()]);
    }

    #[test]
    fn rejects_non_finite_literals_and_ragged_rows() {
        assert!(ChainSpec::parse(
            r#"{"states":[0,1],"kernel":[[NaN,1],[0.5,0.5]],"observable":[1,-1]}"#
        )
        .is_err());
        assert!(ChainSpec::parse(
            r#"{"states":[0,1],"kernel":[[1e999,1],[0.5,0.5]],"observable":[1,-1]}"#
        )
        .is_err());
        let ragged = ChainSpec::parse(
            r#"{"states":[0,1],"kernel":[[1.0],[0.5,0.5]],"observable":[1,-1]}"#,
        )
        .unwrap();
        assert!(matches!(ragged.build(), Err(Error::RaggedKernel { row: 0, .. })));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = ChainSpec::parse("{\n\"states\": [0,\n}").unwrap_err();
        assert!(err.to_string().contains("line"));
    }
}
