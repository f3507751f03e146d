use alloc::string::String;
use core::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

/// Machine-readable diagnostic class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagCode {
    DuplicateName,
    UnknownType,
    UnknownPort,
    DirectionMismatch,
    KindMismatch,
    MultipleWriters,
    InvalidAssociation,
    InvalidEcc,
    InvalidParamBinding,
    Unmapped,
    UnknownDevice,
    DanglingSecureLink,
    DuplicateSecureLink,
    InvalidParam,
    // lowering
    UnsupportedGoal,
    UnsupportedAlgorithm,
    UnsupportedKind,
    SameDeviceLink,
    UncoveredEvent,
    MissingTrigger,
    PortOverflow,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::DuplicateName => "duplicate-name",
            DiagCode::UnknownType => "unknown-type",
            DiagCode::UnknownPort => "unknown-port",
            DiagCode::DirectionMismatch => "direction-mismatch",
            DiagCode::KindMismatch => "kind-mismatch",
            DiagCode::MultipleWriters => "multiple-writers",
            DiagCode::InvalidAssociation => "invalid-association",
            DiagCode::InvalidEcc => "invalid-ecc",
            DiagCode::InvalidParamBinding => "invalid-param-binding",
            DiagCode::Unmapped => "unmapped-instance",
            DiagCode::UnknownDevice => "unknown-device",
            DiagCode::DanglingSecureLink => "dangling-secure-link",
            DiagCode::DuplicateSecureLink => "duplicate-secure-link",
            DiagCode::InvalidParam => "invalid-param",
            DiagCode::UnsupportedGoal => "unsupported-goal",
            DiagCode::UnsupportedAlgorithm => "unsupported-algorithm",
            DiagCode::UnsupportedKind => "unsupported-kind",
            DiagCode::SameDeviceLink => "same-device-link",
            DiagCode::UncoveredEvent => "uncovered-event",
            DiagCode::MissingTrigger => "missing-trigger",
            DiagCode::PortOverflow => "port-overflow",
        }
    }
}

/// Where in an [`crate::model::Application`] a diagnostic points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Location {
    Application,
    FbType(String),
    /// An item of a composite type's internal network.
    TypeNetwork {
        fb_type: String,
        item: NetItem,
    },
    Root(NetItem),
    Device(String),
    Mapping(String),
    SecureLink(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NetItem {
    Instance(String),
    EventConn(usize),
    DataConn(usize),
    Param(usize),
}

impl fmt::Display for NetItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetItem::Instance(n) => write!(f, "instance {n}"),
            NetItem::EventConn(i) => write!(f, "event connection #{i}"),
            NetItem::DataConn(i) => write!(f, "data connection #{i}"),
            NetItem::Param(i) => write!(f, "param #{i}"),
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Application => f.write_str("application"),
            Location::FbType(t) => write!(f, "fbtype {t}"),
            Location::TypeNetwork { fb_type, item } => write!(f, "fbtype {fb_type}: {item}"),
            Location::Root(item) => write!(f, "app: {item}"),
            Location::Device(d) => write!(f, "device {d}"),
            Location::Mapping(i) => write!(f, "mapping of {i}"),
            Location::SecureLink(i) => write!(f, "secure link #{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagCode,
    pub location: Location,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: DiagCode, location: Location, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            location,
            message: message.into(),
        }
    }

    pub fn warning(code: DiagCode, location: Location, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code,
            location,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}[{}]: {}: {}", self.code.as_str(), self.location, self.message)
    }
}
