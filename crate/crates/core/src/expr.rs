//! User-supplied scalar expressions (custom gauges, custom charts, variation
//! fields), backed by `exmex`.

use exmex::{Express, FlatEx};

use crate::error::{Error, Result};

/// A parsed expression over a fixed, ordered list of variable names.
#[derive(Clone, Debug)]
pub struct Expression {
    source: String,
    flat: FlatEx<f64>,
    /// Position of each expression variable in the caller's argument list.
    slots: Vec<usize>,
}

impl Expression {
    /// Parse `source`; every variable must be one of `vars`.
    pub fn parse(source: &str, vars: &[&str]) -> Result<Self> {
        let flat = exmex::parse::<f64>(source)
            .map_err(|e| Error::Schema(format!("cannot parse expression `{source}`: {e}")))?;
        let mut slots = Vec::new();
        for name in flat.var_names() {
            match vars.iter().position(|v| v == name) {
                Some(i) => slots.push(i),
                None => {
                    return Err(Error::Schema(format!(
                        "expression `{source}` uses unknown variable `{name}` (allowed: {})",
                        vars.join(", ")
                    )))
                }
            }
        }
        Ok(Self {
            source: source.to_string(),
            flat,
            slots,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluate with `args` given in the order of the `vars` list used at parse time.
    pub fn eval(&self, args: &[f64]) -> f64 {
        let mut buf = [0.0; 8];
        for (k, &slot) in self.slots.iter().enumerate() {
            buf[k] = args[slot];
        }
        self.flat.eval(&buf[..self.slots.len()]).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variables_are_mapped_by_name() {
        let e = Expression::parse("z - 2*x", &["x", "y", "z"]).unwrap();
        assert_eq!(e.eval(&[1.0, 5.0, 3.0]), 1.0);
        let c = Expression::parse("1.5", &["u", "v"]).unwrap();
        assert_eq!(c.eval(&[0.0, 0.0]), 1.5);
    }

    #[test]
    fn unknown_variables_are_rejected() {
        assert!(matches!(
            Expression::parse("q + 1", &["u", "v"]),
            Err(Error::Schema(_))
        ));
    }
}
