#pragma once

#include <stdexcept>
#include <string>

namespace ecgcnn {

/// Base class for every error this library throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// wfdb parsing
struct MalformedHeader : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct TruncatedData : Error { using Error::Error; };
struct UnknownCode : Error { using Error::Error; };
struct ChannelMissing : Error { using Error::Error; };

// beat preparation
struct UnknownSymbol : Error { using Error::Error; };
struct ZeroPowerSignal : Error { using Error::Error; };
struct IdenticalSignals : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };

// rasterization
struct EmptyDataset : Error { using Error::Error; };
struct DegenerateRange : Error { using Error::Error; };
struct UnsupportedChannelCount : Error { using Error::Error; };

// network / training
struct ShapeMismatch : Error { using Error::Error; };
struct MissingLayer : Error { using Error::Error; };
struct NonFiniteGradient : Error { using Error::Error; };

// weight archives and dataset containers
struct BadMagic : Error { using Error::Error; };
struct VersionUnsupported : Error { using Error::Error; };
struct CorruptTensor : Error { using Error::Error; };

// metrics
struct LengthMismatch : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };

// configuration
struct ConfigError : Error { using Error::Error; };

} // namespace ecgcnn
