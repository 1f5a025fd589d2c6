//! One error type over all modules, with a stable code and input location.

use thiserror::Error;

use crate::conformal::ConformalError;
use crate::cycle::CycleError;
use crate::decomp::DecompError;
use crate::definition::{DefinitionError, DefinitionErrorKind};
use crate::equiv::EquivError;
use crate::expr::{EvalError, ParseError};
use crate::lyapunov::LyapunovError;
use crate::ode::OdeError;
use crate::system::SystemError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Definition(#[from] DefinitionError),
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Conformal(#[from] ConformalError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error("{0}")]
    Pipeline(String),
}

fn system_code(e: &SystemError) -> &'static str {
    match e {
        SystemError::WrongVariables { .. } => "S001",
        SystemError::Parse { .. } => "S002",
        SystemError::TransformNotInvertible { .. } => "S003",
        SystemError::UnsupportedTransformClass(_) => "S004",
        SystemError::Eval(_) => "S005",
    }
}

impl Error {
    pub fn module(&self) -> &'static str {
        match self {
            Error::Parse(_) | Error::Eval(_) => "expr",
            Error::System(_) => "system",
            Error::Definition(_) => "definition",
            Error::Cycle(_) => "cycle",
            Error::Lyapunov(_) => "lyapunov",
            Error::Decomp(_) => "decomp",
            Error::Conformal(_) => "conformal",
            Error::Ode(_) => "ode",
            Error::Equiv(_) => "equiv",
            Error::Pipeline(_) => "pipeline",
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse(_) => "X001",
            Error::Eval(_) => "X002",
            Error::System(e) => system_code(e),
            Error::Definition(d) => match &d.kind {
                DefinitionErrorKind::MissingEquals => "F001",
                DefinitionErrorKind::UnknownKey(_) => "F002",
                DefinitionErrorKind::DuplicateKey(_) => "F003",
                DefinitionErrorKind::Expression { .. } => "F004",
                DefinitionErrorKind::Window => "F005",
                DefinitionErrorKind::Missing(_) => "F006",
                DefinitionErrorKind::System(e) => system_code(e),
            },
            Error::Cycle(e) => match e {
                CycleError::NotRadial(_) => "C001",
                CycleError::InvalidRange(_) => "C002",
                CycleError::InvalidDelta { .. } => "C003",
                CycleError::ThetaDotVanishes { .. } => "C004",
                CycleError::Eval(_) => "C005",
                CycleError::Ode(_) => "C006",
            },
            Error::Lyapunov(e) => match e {
                LyapunovError::OddPowers { .. } => "L001",
                LyapunovError::NotSymbolic => "L002",
                LyapunovError::NotRadial(_) => "L003",
                LyapunovError::InvalidRange(_) => "L004",
                LyapunovError::Quadrature { .. } => "L005",
                LyapunovError::OutOfRange(_) => "L006",
                LyapunovError::Eval { .. } => "L007",
                LyapunovError::InvalidGrid => "L008",
            },
            Error::Decomp(e) => match e {
                DecompError::Eval { .. } => "D001",
                DecompError::Reconstruction { .. } => "D002",
                DecompError::Transform(_) => "D003",
            },
            Error::Conformal(e) => match e {
                ConformalError::InvalidResolution(_) => "M001",
                ConformalError::WrongVariable(_) => "M002",
                ConformalError::NonPositiveRadius { .. } => "M003",
                ConformalError::NotConverged { .. } => "M004",
                ConformalError::NonMonotone { .. } => "M005",
                ConformalError::Eval { .. } => "M006",
                ConformalError::Parse(_) => "M007",
            },
            Error::Ode(e) => match e {
                OdeError::NonFinite { .. } => "O001",
                OdeError::StepUnderflow { .. } => "O002",
                OdeError::Eval { .. } => "O003",
                OdeError::TooManySteps { .. } => "O004",
                OdeError::InvalidArgument(_) => "O005",
            },
            Error::Equiv(e) => match e {
                EquivError::UnclassifiedSystem { .. } => "Q001",
                EquivError::Cycle(_) => "Q002",
                EquivError::InvalidGrid => "Q003",
            },
            Error::Pipeline(_) => "P001",
        }
    }

    /// Where in the input the problem was found, when that is known.
    pub fn location(&self) -> Option<String> {
        match self {
            Error::Parse(p) => Some(format!("column {}", p.position + 1)),
            Error::System(SystemError::Parse { component, source }) => {
                Some(format!("{component}, column {}", source.position + 1))
            }
            Error::System(SystemError::WrongVariables { component, .. }) => Some(component.to_string()),
            Error::System(SystemError::TransformNotInvertible { x, y, .. }) => Some(format!("({x}, {y})")),
            Error::Definition(d) if d.line > 0 => Some(format!("line {}", d.line)),
            Error::Cycle(CycleError::ThetaDotVanishes { r, theta, .. }) => {
                Some(format!("r = {r}, theta = {theta}"))
            }
            Error::Lyapunov(LyapunovError::Quadrature { at, .. }) => Some(format!("r = {at}")),
            Error::Lyapunov(LyapunovError::Eval { x, y, .. }) | Error::Decomp(DecompError::Eval { x, y, .. }) => {
                Some(format!("({x}, {y})"))
            }
            Error::Conformal(ConformalError::NonPositiveRadius { theta, .. })
            | Error::Conformal(ConformalError::Eval { theta, .. }) => Some(format!("theta = {theta}")),
            Error::Ode(OdeError::NonFinite { time }) | Error::Ode(OdeError::StepUnderflow { time, .. }) => {
                Some(format!("t = {time}"))
            }
            _ => None,
        }
    }

    /// `module[code] at location: message`.
    pub fn report(&self) -> String {
        // the location already names the line
        let msg = match self {
            Error::Definition(d) if d.line > 0 => d.kind.to_string(),
            _ => self.to_string(),
        };
        match self.location() {
            Some(loc) => format!("{}[{}] at {}: {}", self.module(), self.code(), loc, msg),
            None => format!("{}[{}]: {}", self.module(), self.code(), msg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::definition::parse_definition;

    #[test]
    fn report_format() {
        let e: Error = parse_definition("fx = y\nfy = 1 +").unwrap_err().into();
        assert_eq!(e.module(), "definition");
        assert_eq!(e.code(), "F004");
        assert!(e.report().starts_with("definition[F004] at line 2: `fy`"));
        let e: Error = crate::expr::parse("x $").unwrap_err().into();
        assert_eq!(e.location().as_deref(), Some("column 3"));
    }
}
