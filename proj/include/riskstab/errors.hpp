#pragma once

#include <stdexcept>
#include <string>

namespace riskstab {

// Base class for every error thrown by the library. Each condition gets its
// own type so callers (and the CLI exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// -- linear algebra ----------------------------------------------------------
struct NonSymmetric : Error { using Error::Error; };
struct NotPsd : Error { using Error::Error; };
struct DimMismatch : Error { using Error::Error; };
struct NotSchurStable : Error { using Error::Error; };
struct SolveSingular : Error { using Error::Error; };
struct NonConvergence : Error { using Error::Error; };

// -- risk functionals --------------------------------------------------------
struct BadAlpha : Error { using Error::Error; };
struct BadOrder : Error { using Error::Error; };
struct BadWeight : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct KindMismatch : Error { using Error::Error; };
struct EmptySample : Error { using Error::Error; };

// -- certificates ------------------------------------------------------------
struct BadKappa : Error { using Error::Error; };
struct BadEta : Error { using Error::Error; };
struct AssumptionViolated : Error { using Error::Error; };
struct NonCoherentRisk : Error { using Error::Error; };
struct BadSource : Error { using Error::Error; };
struct BadTarget : Error { using Error::Error; };
struct SigmaDominanceViolated : Error { using Error::Error; };

// -- stochastic systems ------------------------------------------------------
struct BadNoiseSpec : Error { using Error::Error; };
struct MissingPairedDraws : Error { using Error::Error; };
struct AnalyticUnavailable : Error { using Error::Error; };

// -- controllers -------------------------------------------------------------
struct SingularGainSystem : Error { using Error::Error; };
struct NonStationaryNoise : Error { using Error::Error; };

// -- CLI / configuration -----------------------------------------------------
struct ConfigInvalid : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };

}  // namespace riskstab
