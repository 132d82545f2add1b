#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace affect {

enum class Errc {
  asymmetric_matrix,
  negative_dissimilarity,
  dimension_mismatch,
  empty_intersection,
  alpha_out_of_range,
  id_mismatch,
  wrong_kind,
  k_out_of_range,
  not_psd,
  no_convergence,
  empty_range,
  non_square,
  bad_config,
  parse_error,
  too_few_objects,
};

constexpr std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::asymmetric_matrix: return "AsymmetricMatrix";
    case Errc::negative_dissimilarity: return "NegativeDissimilarity";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::empty_intersection: return "EmptyIntersection";
    case Errc::alpha_out_of_range: return "AlphaOutOfRange";
    case Errc::id_mismatch: return "IdMismatch";
    case Errc::wrong_kind: return "WrongKind";
    case Errc::k_out_of_range: return "KOutOfRange";
    case Errc::not_psd: return "NotPSD";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::empty_range: return "EmptyRange";
    case Errc::non_square: return "NonSquare";
    case Errc::bad_config: return "BadConfig";
    case Errc::parse_error: return "ParseError";
    case Errc::too_few_objects: return "TooFewObjects";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace affect
