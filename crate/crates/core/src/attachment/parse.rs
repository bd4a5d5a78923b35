//! Text form of attachment specs: `kind:key=value,...`.
//!
//! ```text
//! constant:c=1
//! linear:a=1,b=1
//! power:p=2,c=1
//! table:values=1|2|3,tail=repeat-last        (tail: repeat-last | linear-extrapolate | error)
//! random:values=1|3,probs=0.5|0.5[,exponent=1]
//! random:values=1|2;1|3,probs=1|0;0.5|0.5    (one law per degree, ';'-separated, last repeats)
//! expr:f=if(k==1 || k%2==0,(k+1)^2,k^2-1)[,lower=0.875@2@15][,upper=1@2@0]
//! parity-square
//! ```
//!
//! Envelope values are `coef@exponent@from`. Commas inside parentheses belong
//! to the formula.

use std::fmt;
use std::str::FromStr;

use super::{AttachmentSpec, Envelope, FiniteDist, PowerBound, TailRule};
use crate::error::{Error, Result};

fn fail(input: &str, reason: impl Into<String>) -> Error {
    Error::Parse { input: input.to_string(), reason: reason.into() }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

struct Fields<'a> {
    input: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn new(input: &'a str, body: &'a str) -> Result<Self> {
        let mut pairs = Vec::new();
        if !body.trim().is_empty() {
            for part in split_top_level(body) {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| fail(input, format!("expected key=value, got `{}`", part.trim())))?;
                let key = k.trim();
                if pairs.iter().any(|(seen, _)| *seen == key) {
                    return Err(fail(input, format!("duplicate key `{key}`")));
                }
                pairs.push((key, v.trim()));
            }
        }
        Ok(Fields { input, pairs })
    }

    fn take(&mut self, key: &str) -> Option<&'a str> {
        let pos = self.pairs.iter().position(|(k, _)| *k == key)?;
        Some(self.pairs.remove(pos).1)
    }

    fn required(&mut self, key: &str) -> Result<&'a str> {
        self.take(key).ok_or_else(|| fail(self.input, format!("missing field `{key}`")))
    }

    fn number(&self, key: &str, raw: &str) -> Result<f64> {
        raw.parse::<f64>()
            .map_err(|_| fail(self.input, format!("field `{key}`: `{raw}` is not a number")))
    }

    fn req_number(&mut self, key: &str) -> Result<f64> {
        let raw = self.required(key)?;
        self.number(key, raw)
    }

    fn opt_number(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            Some(raw) => self.number(key, raw),
            None => Ok(default),
        }
    }

    fn list(&self, key: &str, raw: &str) -> Result<Vec<f64>> {
        raw.split('|').map(|x| self.number(key, x.trim())).collect()
    }

    fn bound(&mut self, key: &str) -> Result<Option<PowerBound>> {
        let Some(raw) = self.take(key) else { return Ok(None) };
        let parts: Vec<&str> = raw.split('@').collect();
        if parts.len() != 3 {
            return Err(fail(self.input, format!("field `{key}` must be coef@exponent@from")));
        }
        let from = parts[2]
            .trim()
            .parse::<u64>()
            .map_err(|_| fail(self.input, format!("field `{key}`: bad starting degree")))?;
        Ok(Some(PowerBound::new(
            self.number(key, parts[0].trim())?,
            self.number(key, parts[1].trim())?,
            from,
        )))
    }

    fn finish(self) -> Result<()> {
        match self.pairs.first() {
            Some((k, _)) => Err(fail(self.input, format!("unknown field `{k}`"))),
            None => Ok(()),
        }
    }
}

fn reword(input: &str, e: Error) -> Error {
    match e {
        Error::InvalidArgument(reason) => fail(input, reason),
        other => other,
    }
}

impl FromStr for AttachmentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let input = s.trim();
        let (kind, body) = input.split_once(':').unwrap_or((input, ""));
        let mut f = Fields::new(input, body)?;
        let spec = match kind.trim() {
            "constant" => AttachmentSpec::constant(f.req_number("c")?),
            "linear" => {
                let a = f.req_number("a")?;
                let b = f.req_number("b")?;
                AttachmentSpec::linear(a, b)
            }
            "power" => {
                let p = f.req_number("p")?;
                let c = f.opt_number("c", 1.0)?;
                AttachmentSpec::power(p, c)
            }
            "table" => {
                let raw = f.required("values")?;
                let values = f.list("values", raw)?;
                let tail = match f.take("tail").unwrap_or("error") {
                    "repeat-last" => TailRule::RepeatLast,
                    "linear-extrapolate" => TailRule::LinearExtrapolate,
                    "error" => TailRule::Error,
                    other => return Err(fail(input, format!("unknown tail rule `{other}`"))),
                };
                AttachmentSpec::table(values, tail)
            }
            "random" => {
                let values = f.required("values")?;
                let probs = f.required("probs")?;
                let exponent = f.opt_number("exponent", 0.0)?;
                let vs: Vec<&str> = values.split(';').collect();
                let ps: Vec<&str> = probs.split(';').collect();
                if vs.len() != ps.len() {
                    return Err(fail(input, "values and probs list different numbers of laws"));
                }
                let mut laws = Vec::with_capacity(vs.len());
                for (v, p) in vs.iter().zip(&ps) {
                    let law = FiniteDist::new(f.list("values", v)?, f.list("probs", p)?)
                        .map_err(|e| reword(input, e))?;
                    laws.push(law);
                }
                AttachmentSpec::random_finite(laws, exponent)
            }
            "expr" => {
                let formula = f.required("f")?;
                let envelope = Envelope { lower: f.bound("lower")?, upper: f.bound("upper")? };
                AttachmentSpec::piecewise(formula, envelope)
            }
            "parity-square" => Ok(AttachmentSpec::parity_square()),
            other => return Err(fail(input, format!("unknown kind `{other}`"))),
        }
        .map_err(|e| reword(input, e))?;
        f.finish()?;
        Ok(spec)
    }
}

fn join(values: &[f64], sep: &str) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(sep)
}

impl fmt::Display for AttachmentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttachmentSpec::Constant { c } => write!(f, "constant:c={c}"),
            AttachmentSpec::Linear { a, b } => write!(f, "linear:a={a},b={b}"),
            AttachmentSpec::Power { p, c } => write!(f, "power:p={p},c={c}"),
            AttachmentSpec::Table { values, tail } => {
                let tail = match tail {
                    TailRule::RepeatLast => "repeat-last",
                    TailRule::LinearExtrapolate => "linear-extrapolate",
                    TailRule::Error => "error",
                };
                write!(f, "table:values={},tail={tail}", join(values, "|"))
            }
            AttachmentSpec::RandomFinite { per_degree, exponent } => {
                let values: Vec<String> = per_degree.iter().map(|d| join(d.values(), "|")).collect();
                let probs: Vec<String> = per_degree.iter().map(|d| join(d.probs(), "|")).collect();
                write!(f, "random:values={},probs={}", values.join(";"), probs.join(";"))?;
                if *exponent != 0.0 {
                    write!(f, ",exponent={exponent}")?;
                }
                Ok(())
            }
            AttachmentSpec::Piecewise { expr, envelope } => {
                write!(f, "expr:f={}", expr.source())?;
                if let Some(b) = envelope.lower {
                    write!(f, ",lower={}@{}@{}", b.coef, b.exponent, b.from)?;
                }
                if let Some(b) = envelope.upper {
                    write!(f, ",upper={}@{}@{}", b.coef, b.exponent, b.from)?;
                }
                Ok(())
            }
        }
    }
}

impl serde::Serialize for AttachmentSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for AttachmentSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        let cases = [
            "constant:c=1",
            "linear:a=1,b=1",
            "power:p=2,c=1",
            "table:values=1|2|3,tail=repeat-last",
            "random:values=1|3,probs=0.5|0.5",
            "random:values=1|2;1|3,probs=1|0;0.5|0.5,exponent=1",
            "expr:f=if(k==1 || k%2==0,(k+1)^2,k^2-1),lower=0.875@2@15,upper=1@2@0",
        ];
        for case in cases {
            let spec: AttachmentSpec = case.parse().unwrap();
            assert_eq!(spec.to_string(), case);
            let again: AttachmentSpec = spec.to_string().parse().unwrap();
            assert_eq!(again, spec);
        }
        let preset: AttachmentSpec = "parity-square".parse().unwrap();
        assert_eq!(preset, AttachmentSpec::parity_square());
    }

    #[test]
    fn reports_the_offending_field() {
        let err = "linear:a=1".parse::<AttachmentSpec>().unwrap_err();
        assert!(err.to_string().contains("`b`"), "{err}");
        let err = "linear:a=x,b=1".parse::<AttachmentSpec>().unwrap_err();
        assert!(err.to_string().contains("`a`"), "{err}");
        let err = "linear:a=1,b=1,z=2".parse::<AttachmentSpec>().unwrap_err();
        assert!(err.to_string().contains("`z`"), "{err}");
        assert!("wobbly:c=1".parse::<AttachmentSpec>().is_err());
        assert!("constant:c=-1".parse::<AttachmentSpec>().is_err());
        assert!("random:values=1|3,probs=0.5|0.6".parse::<AttachmentSpec>().is_err());
        assert!("expr:f=k+".parse::<AttachmentSpec>().is_err());
    }
}
