#include "dapce/errors.hpp"

namespace dapce {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::NonFiniteInput: return "non-finite-input";
    case ErrorKind::DegenerateVariable: return "degenerate-variable";
    case ErrorKind::IllConditionedMoments: return "ill-conditioned-moments";
    case ErrorKind::UnsupportedDegree: return "unsupported-degree";
    case ErrorKind::NumericOverflow: return "numeric-overflow";
    case ErrorKind::InvalidState: return "invalid-state";
    case ErrorKind::InvalidModel: return "invalid-model";
    case ErrorKind::DomainError: return "domain-error";
    case ErrorKind::UndefinedStatistic: return "undefined-statistic";
    case ErrorKind::NumericFailure: return "numeric-failure";
    case ErrorKind::UnsupportedVersion: return "unsupported-version";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::ChecksumMismatch: return "checksum-mismatch";
    case ErrorKind::BadFormat: return "bad-format";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace dapce
