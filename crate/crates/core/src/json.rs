//! JSON file formats. Every integer datum is a decimal string so that values
//! of any magnitude survive a round trip unchanged.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::matrix::{IntMatrix, RaggedRows};
use crate::model::{
    FourBlockInstance, GeneralizedNFoldInstance, Solution, SolverTag, ValidationError,
};

pub const GENERALIZED_KIND: &str = "generalized_nfold";

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field {field}: {value:?} is not a decimal integer")]
    BadInteger { field: String, value: String },
    #[error("field {field}: {source}")]
    Ragged {
        field: String,
        #[source]
        source: RaggedRows,
    },
    #[error("invalid instance: {}", join(.0))]
    Invalid(Vec<ValidationError>),
    #[error("expected a standard 4-block instance, found kind {0:?}")]
    WrongKind(String),
}

fn join(errs: &[ValidationError]) -> String {
    errs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Count {
    Num(usize),
    Str(String),
}

impl Count {
    fn get(&self) -> Result<usize, ParseError> {
        match self {
            Count::Num(n) => Ok(*n),
            Count::Str(s) => s.trim().parse().map_err(|_| ParseError::BadInteger {
                field: "n".into(),
                value: s.clone(),
            }),
        }
    }
}

type Rows = Vec<Vec<String>>;

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    n: Count,
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    b_mat: Option<Rows>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    c_mat: Option<Rows>,
    #[serde(rename = "D")]
    d: Rows,
    b0: Vec<String>,
    b: Vec<Vec<String>>,
    l: Vec<String>,
    u: Vec<String>,
    w: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GeneralizedFile {
    kind: String,
    n: Count,
    #[serde(rename = "A")]
    a: Vec<Rows>,
    #[serde(rename = "D")]
    d: Vec<Rows>,
    b0: Vec<String>,
    b: Vec<Vec<String>>,
    l: Vec<String>,
    u: Vec<String>,
    w: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SolutionFile {
    x: Vec<String>,
    objective: String,
    solver_tag: SolverTag,
}

/// Either kind of instance file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyInstance {
    FourBlock(FourBlockInstance),
    Generalized(GeneralizedNFoldInstance),
}

fn int(field: &str, s: &str) -> Result<BigInt, ParseError> {
    s.trim().parse().map_err(|_| ParseError::BadInteger {
        field: field.to_string(),
        value: s.to_string(),
    })
}

fn ints(field: &str, v: &[String]) -> Result<Vec<BigInt>, ParseError> {
    v.iter().map(|s| int(field, s)).collect()
}

fn matrix(field: &str, rows: &Rows, cols_if_empty: usize) -> Result<IntMatrix, ParseError> {
    let rows = rows
        .iter()
        .map(|r| ints(field, r))
        .collect::<Result<Vec<_>, _>>()?;
    IntMatrix::from_rows(rows, cols_if_empty).map_err(|source| ParseError::Ragged {
        field: field.to_string(),
        source,
    })
}

fn is_infinite(s: &str) -> bool {
    let t = s.trim().trim_start_matches(['+', '-']).to_ascii_lowercase();
    t == "inf" || t == "infinity" || t == "∞"
}

/// Bounds may be written as `"inf"`/`"-inf"` in hand-made files; such entries
/// are reported as [`ValidationError::InfiniteBound`].
fn bounds(l: &[String], u: &[String]) -> Result<(Vec<BigInt>, Vec<BigInt>), ParseError> {
    let mut infinite = Vec::new();
    for (index, (lo, hi)) in l.iter().zip(u).enumerate() {
        if is_infinite(lo) || is_infinite(hi) {
            infinite.push(ValidationError::InfiniteBound { index });
        }
    }
    if !infinite.is_empty() {
        return Err(ParseError::Invalid(infinite));
    }
    Ok((ints("l", l)?, ints("u", u)?))
}

fn strs(v: &[BigInt]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

fn rows_of(m: &IntMatrix) -> Rows {
    m.to_rows().iter().map(|r| strs(r)).collect()
}

fn four_block_from_file(f: InstanceFile) -> Result<FourBlockInstance, ParseError> {
    let n = f.n.get()?;
    let a = matrix("A", &f.a, 0)?;
    let t_b = f
        .b_mat
        .as_ref()
        .and_then(|r| r.first().map(Vec::len))
        .or_else(|| f.c_mat.as_ref().and_then(|r| r.first().map(Vec::len)))
        .unwrap_or(0);
    let d = matrix("D", &f.d, a.cols())?;
    let b = match &f.b_mat {
        Some(rows) => matrix("B", rows, t_b)?,
        None => IntMatrix::zeros(a.rows(), 0),
    };
    let c = match &f.c_mat {
        Some(rows) => matrix("C", rows, t_b)?,
        None => IntMatrix::zeros(d.rows(), t_b),
    };
    let (l, u) = bounds(&f.l, &f.u)?;
    let inst = FourBlockInstance {
        n,
        a,
        b,
        c,
        d,
        b0: ints("b0", &f.b0)?,
        rhs: f
            .b
            .iter()
            .map(|bi| ints("b", bi))
            .collect::<Result<_, _>>()?,
        l,
        u,
        w: ints("w", &f.w)?,
    };
    inst.validate().map_err(ParseError::Invalid)?;
    Ok(inst)
}

fn generalized_from_file(f: GeneralizedFile) -> Result<GeneralizedNFoldInstance, ParseError> {
    let n = f.n.get()?;
    let a_blocks = f
        .a
        .iter()
        .map(|rows| matrix("A", rows, 0))
        .collect::<Result<Vec<_>, _>>()?;
    let t = a_blocks.first().map_or(0, IntMatrix::cols);
    let d_blocks = f
        .d
        .iter()
        .map(|rows| matrix("D", rows, t))
        .collect::<Result<Vec<_>, _>>()?;
    let (l, u) = bounds(&f.l, &f.u)?;
    let inst = GeneralizedNFoldInstance {
        n,
        a_blocks,
        d_blocks,
        b0: ints("b0", &f.b0)?,
        rhs: f
            .b
            .iter()
            .map(|bi| ints("b", bi))
            .collect::<Result<_, _>>()?,
        l,
        u,
        w: ints("w", &f.w)?,
    };
    inst.validate().map_err(ParseError::Invalid)?;
    Ok(inst)
}

/// Parses and validates a standard instance file.
pub fn parse_instance(text: &str) -> Result<FourBlockInstance, ParseError> {
    match parse_any(text)? {
        AnyInstance::FourBlock(inst) => Ok(inst),
        AnyInstance::Generalized(_) => Err(ParseError::WrongKind(GENERALIZED_KIND.into())),
    }
}

pub fn parse_any(text: &str) -> Result<AnyInstance, ParseError> {
    let value: Value = serde_json::from_str(text)?;
    let kind = value.get("kind").and_then(Value::as_str).map(str::to_owned);
    match kind.as_deref() {
        Some(GENERALIZED_KIND) => Ok(AnyInstance::Generalized(generalized_from_file(
            serde_json::from_value(value)?,
        )?)),
        None | Some("four_block") => Ok(AnyInstance::FourBlock(four_block_from_file(
            serde_json::from_value(value)?,
        )?)),
        Some(other) => Err(ParseError::WrongKind(other.to_string())),
    }
}

/// Pretty-printed instance JSON; `B` and `C` are omitted when `t_B = 0`.
pub fn instance_to_json(inst: &FourBlockInstance) -> String {
    let with_x0 = inst.t_b() > 0;
    let file = InstanceFile {
        kind: None,
        n: Count::Num(inst.n),
        a: rows_of(&inst.a),
        b_mat: with_x0.then(|| rows_of(&inst.b)),
        c_mat: with_x0.then(|| rows_of(&inst.c)),
        d: rows_of(&inst.d),
        b0: strs(&inst.b0),
        b: inst.rhs.iter().map(|v| strs(v)).collect(),
        l: strs(&inst.l),
        u: strs(&inst.u),
        w: strs(&inst.w),
    };
    serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
}

pub fn generalized_to_json(inst: &GeneralizedNFoldInstance) -> String {
    let file = GeneralizedFile {
        kind: GENERALIZED_KIND.into(),
        n: Count::Num(inst.n),
        a: inst.a_blocks.iter().map(rows_of).collect(),
        d: inst.d_blocks.iter().map(rows_of).collect(),
        b0: strs(&inst.b0),
        b: inst.rhs.iter().map(|v| strs(v)).collect(),
        l: strs(&inst.l),
        u: strs(&inst.u),
        w: strs(&inst.w),
    };
    serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
}

pub fn solution_to_json(sol: &Solution) -> String {
    let file = SolutionFile {
        x: strs(&sol.x),
        objective: sol.objective.to_string(),
        solver_tag: sol.solver_tag,
    };
    serde_json::to_string_pretty(&file).expect("solution serialization cannot fail")
}

pub fn parse_solution(text: &str) -> Result<Solution, ParseError> {
    let f: SolutionFile = serde_json::from_str(text)?;
    Ok(Solution {
        x: ints("x", &f.x)?,
        objective: int("objective", &f.objective)?,
        solver_tag: f.solver_tag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const NFOLD: &str = r#"{
        "n": 2,
        "A": [["2", "3"]],
        "D": [["1", "0"]],
        "b0": ["3"],
        "b": [["7"], ["5"]],
        "l": ["0", "0", "0", "0"],
        "u": ["5", "5", "5", "5"],
        "w": ["1", "-1", "0", "100000000000000000000000000000"]
    }"#;

    #[test]
    fn nfold_file_without_b_and_c() {
        let inst = parse_instance(NFOLD).unwrap();
        assert_eq!(inst.t_b(), 0);
        assert_eq!((inst.b.rows(), inst.c.rows()), (1, 1));
        assert_eq!(inst.w[3], BigInt::from(10).pow(29));
        let again = parse_instance(&instance_to_json(&inst)).unwrap();
        assert_eq!(again, inst);
    }

    #[test]
    fn infinite_bound_rejected() {
        let text = NFOLD.replacen(r#""u": ["5""#, r#""u": ["inf""#, 1);
        match parse_instance(&text) {
            Err(ParseError::Invalid(errs)) => {
                assert_eq!(errs, vec![ValidationError::InfiniteBound { index: 0 }])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_integer_rejected() {
        let text = NFOLD.replacen(r#""b0": ["3"]"#, r#""b0": ["3.5"]"#, 1);
        assert!(matches!(
            parse_instance(&text),
            Err(ParseError::BadInteger { .. })
        ));
    }

    #[test]
    fn shape_errors_surface() {
        let text = NFOLD.replacen(r#""b0": ["3"]"#, r#""b0": ["3", "4"]"#, 1);
        assert!(matches!(parse_instance(&text), Err(ParseError::Invalid(_))));
    }

    #[test]
    fn solution_round_trip() {
        let sol = Solution {
            x: vec![BigInt::from(-3), BigInt::from(10).pow(45)],
            objective: BigInt::from(7),
            solver_tag: SolverTag::FourblockSnf,
        };
        let text = solution_to_json(&sol);
        assert!(text.contains("\"fourblock_snf\""));
        assert_eq!(parse_solution(&text).unwrap(), sol);
    }
}
