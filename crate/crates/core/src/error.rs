use thiserror::Error;

/// Process exit classes used by the command line front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Ok,
    PropertyFailure,
    InputError,
    BudgetExceeded,
}

impl ExitClass {
    pub fn code(self) -> i32 {
        match self {
            ExitClass::Ok => 0,
            ExitClass::PropertyFailure => 1,
            ExitClass::InputError => 2,
            ExitClass::BudgetExceeded => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("presentation not desk-decidable: {0}")]
    NotDeskDecidable(String),

    #[error("property violated: {0}")]
    Property(String),

    #[error("ball margin too small: {0}; increase the ball radius")]
    BallMargin(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("size guard tripped: {0}")]
    SizeGuard(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ExitClass {
        match self {
            Error::Input(_) | Error::NotDeskDecidable(_) | Error::Json(_) | Error::Io(_) => {
                ExitClass::InputError
            }
            Error::Property(_) | Error::BallMargin(_) => ExitClass::PropertyFailure,
            Error::Budget(_) | Error::SizeGuard(_) => ExitClass::BudgetExceeded,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
