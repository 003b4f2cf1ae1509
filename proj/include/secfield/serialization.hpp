#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "secfield/diffusion.hpp"
#include "secfield/field.hpp"
#include "secfield/pipeline.hpp"
#include "secfield/sec_frame.hpp"

namespace secfield {

inline constexpr const char* kBasisSchema = "sec-field/basis-v1";
inline constexpr const char* kModelSchema = "sec-field/model-v1";

/// Coefficient tensors are embedded in model documents only when their total
/// entry count stays below this; larger fits store just what evaluation needs.
inline constexpr std::size_t kMaxSerializedTensorEntries = 4'000'000;

// Matrices are nested row-major arrays; doubles are written in shortest
// round-trip form, so write -> read is bit-exact.
nlohmann::json to_json(const Eigen::MatrixXd& m);
nlohmann::json to_json(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

nlohmann::json basis_to_json(const DiffusionBasis& basis);
/// Throws FormatVersion on a schema mismatch and Parse on malformed content.
DiffusionBasis basis_from_json(const nlohmann::json& j);

void write_basis(const DiffusionBasis& basis, const std::filesystem::path& path);
DiffusionBasis read_basis(const std::filesystem::path& path);

/// Everything needed to rebuild a ReconstructedField without refitting.
struct ModelDocument {
  std::shared_ptr<const DiffusionBasis> basis;
  ResolutionParams params;
  Eigen::MatrixXd F_coeffs;        // L1 x d
  Eigen::MatrixXd b;               // L x J
  Eigen::MatrixXd eval_matrix;     // d x L2
  Eigen::Index gram_rank = 0;
  Eigen::VectorXd gram_eigenvalues;  // descending, full spectrum
  double gram_asymmetry = 0.0;
  std::optional<SecTensors> tensors;

  ReconstructedField field() const;
};

/// Embeds tensors when `with_tensors` and they fit under
/// kMaxSerializedTensorEntries.
ModelDocument make_model_document(const FitResult& fit, bool with_tensors = true);

nlohmann::json model_to_json(const ModelDocument& doc);
ModelDocument model_from_json(const nlohmann::json& j);

std::string format_model(const ModelDocument& doc);
ModelDocument parse_model(const std::string& text);
void write_model(const ModelDocument& doc, const std::filesystem::path& path);
ModelDocument read_model(const std::filesystem::path& path);

/// Parses JSON text, mapping syntax errors to ParseError.
nlohmann::json parse_json(const std::string& text);

}  // namespace secfield
