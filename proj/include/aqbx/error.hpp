#ifndef AQBX_ERROR_HPP
#define AQBX_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace aqbx {

enum class ErrorKind {
  Domain,
  Unsupported,
  Singular,
  OutsideDisc,
  OrderCap,
  UpsamplingCap,
  ToleranceUnreachable,
  PreimageNotFound,
  TrustRegion,
  GeometryTooClose,
  NonConvergence,
  Config,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::OutsideDisc: return "outside-disc";
    case ErrorKind::OrderCap: return "order-cap";
    case ErrorKind::UpsamplingCap: return "upsampling-cap";
    case ErrorKind::ToleranceUnreachable: return "tolerance-unreachable";
    case ErrorKind::PreimageNotFound: return "preimage-not-found";
    case ErrorKind::TrustRegion: return "trust-region";
    case ErrorKind::GeometryTooClose: return "geometry-too-close";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace aqbx

#endif
