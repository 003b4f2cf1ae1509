#include "secfield/serialization.hpp"

#include "secfield/error.hpp"
#include "secfield/io.hpp"

namespace secfield {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorKind::Parse, "malformed document: " + what);
}

const json& field_of(const json& j, const char* key) {
  if (!j.is_object()) malformed("expected an object");
  auto it = j.find(key);
  if (it == j.end()) malformed(std::string("missing key '") + key + "'");
  return *it;
}

double number(const json& j, const char* key) {
  const json& v = field_of(j, key);
  if (!v.is_number()) malformed(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

long long integer(const json& j, const char* key) {
  const json& v = field_of(j, key);
  if (!v.is_number_integer()) malformed(std::string("'") + key + "' must be an integer");
  return v.get<long long>();
}

void check_schema(const json& j, const char* expected) {
  if (!j.is_object()) malformed("expected an object");
  auto it = j.find("schema");
  if (it == j.end() || !it->is_string())
    throw Error(ErrorKind::FormatVersion, std::string("missing schema tag, expected ") + expected);
  if (it->get<std::string>() != expected)
    throw Error(ErrorKind::FormatVersion, "unsupported schema '" + it->get<std::string>() +
                                              "', expected " + expected);
}

template <std::size_t Rank>
json tensor_to_json(const Tensor<Rank>& t) {
  json shape = json::array();
  for (auto e : t.extents()) shape.push_back(e);
  return json{{"shape", shape}, {"data", t.values()}};
}

template <std::size_t Rank>
Tensor<Rank> tensor_from_json(const json& j) {
  const json& shape = field_of(j, "shape");
  if (!shape.is_array() || shape.size() != Rank) malformed("tensor shape has the wrong rank");
  typename Tensor<Rank>::Extents extents;
  for (std::size_t a = 0; a < Rank; ++a) {
    if (!shape[a].is_number_integer() || shape[a].get<long long>() < 0)
      malformed("tensor extents must be non-negative integers");
    extents[a] = shape[a].get<Eigen::Index>();
  }
  Tensor<Rank> t(extents);
  const json& data = field_of(j, "data");
  if (!data.is_array() || data.size() != t.size()) malformed("tensor data length mismatch");
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!data[k].is_number()) malformed("tensor entries must be numbers");
    t.data()[k] = data[k].get<double>();
  }
  return t;
}

json params_to_json(const ResolutionParams& p) {
  return json{{"J", p.J}, {"L", p.L}, {"L1", p.L1}, {"L2", p.L2}, {"L_D", p.L_D}, {"eta", p.eta}};
}

ResolutionParams params_from_json(const json& j) {
  ResolutionParams p;
  p.J = static_cast<int>(integer(j, "J"));
  p.L = static_cast<int>(integer(j, "L"));
  p.L1 = static_cast<int>(integer(j, "L1"));
  p.L2 = static_cast<int>(integer(j, "L2"));
  p.L_D = static_cast<int>(integer(j, "L_D"));
  p.eta = number(j, "eta");
  return p;
}

void expect_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                  const char* name) {
  if (m.rows() != rows || m.cols() != cols)
    malformed(std::string("'") + name + "' has shape " + std::to_string(m.rows()) + "x" +
              std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
              std::to_string(cols));
}

}  // namespace

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) malformed("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      malformed("ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) malformed("matrix entries must be numbers");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) malformed("vector must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) malformed("vector entries must be numbers");
    v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  }
  return v;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("invalid JSON: ") + e.what());
  }
}

json basis_to_json(const DiffusionBasis& basis) {
  return json{{"schema", kBasisSchema},
              {"epsilon", basis.epsilon},
              {"dim_manifold", basis.dim_manifold},
              {"volume", basis.volume},
              {"eigenvalues_markov", to_json(basis.markov_eigenvalues)},
              {"eigenvalues_laplace", to_json(basis.laplace_eigenvalues)},
              {"eigenvectors", to_json(basis.eigenvectors)},
              {"weights", to_json(basis.weights)},
              {"degrees_r", to_json(basis.degrees_right)},
              {"degrees_l", to_json(basis.degrees_left)},
              {"points", to_json(basis.points)},
              {"warnings", basis.warnings}};
}

DiffusionBasis basis_from_json(const json& j) {
  check_schema(j, kBasisSchema);
  DiffusionBasis b;
  b.epsilon = number(j, "epsilon");
  b.dim_manifold = static_cast<int>(integer(j, "dim_manifold"));
  b.volume = number(j, "volume");
  b.markov_eigenvalues = vector_from_json(field_of(j, "eigenvalues_markov"));
  b.laplace_eigenvalues = vector_from_json(field_of(j, "eigenvalues_laplace"));
  b.eigenvectors = matrix_from_json(field_of(j, "eigenvectors"));
  b.weights = vector_from_json(field_of(j, "weights"));
  b.degrees_right = vector_from_json(field_of(j, "degrees_r"));
  b.degrees_left = vector_from_json(field_of(j, "degrees_l"));
  b.points = matrix_from_json(field_of(j, "points"));
  const json& warnings = field_of(j, "warnings");
  if (!warnings.is_array()) malformed("'warnings' must be an array");
  for (const auto& w : warnings) {
    if (!w.is_string()) malformed("warnings must be strings");
    b.warnings.push_back(w.get<std::string>());
  }

  const Eigen::Index n = b.points.rows(), m = b.eigenvectors.cols();
  if (!(b.epsilon > 0.0)) malformed("epsilon must be positive");
  if (n < 1 || b.eigenvectors.rows() != n) malformed("eigenvectors must have one row per point");
  if (b.markov_eigenvalues.size() != m || b.laplace_eigenvalues.size() != m)
    malformed("eigenvalue lists must have one entry per eigenvector");
  if (b.weights.size() != n || b.degrees_right.size() != n || b.degrees_left.size() != n)
    malformed("weights and degrees must have one entry per point");
  return b;
}

void write_basis(const DiffusionBasis& basis, const std::filesystem::path& path) {
  write_file_atomic(path, basis_to_json(basis).dump() + "\n");
}

DiffusionBasis read_basis(const std::filesystem::path& path) {
  return basis_from_json(parse_json(read_file(path)));
}

ReconstructedField ModelDocument::field() const {
  return ReconstructedField(basis, eval_matrix, params);
}

ModelDocument make_model_document(const FitResult& fit, bool with_tensors) {
  ModelDocument doc;
  doc.basis = fit.basis;
  doc.params = fit.solution.params;
  doc.F_coeffs = fit.tensors.F_coeffs;
  doc.b = fit.solution.b;
  doc.eval_matrix = fit.field.eval_matrix();
  doc.gram_rank = fit.solution.gram_rank;
  doc.gram_eigenvalues = fit.solution.gram_eigenvalues;
  doc.gram_asymmetry = fit.tensors.gram_asymmetry;
  const std::size_t entries = fit.tensors.c.size() + fit.tensors.g.size() +
                              fit.tensors.d.raw().size() +
                              static_cast<std::size_t>(fit.tensors.gram.size());
  if (with_tensors && entries <= kMaxSerializedTensorEntries) doc.tensors = fit.tensors;
  return doc;
}

json model_to_json(const ModelDocument& doc) {
  if (!doc.basis) throw Error(ErrorKind::InvalidArgument, "model document has no basis");
  json j{{"schema", kModelSchema},
         {"params", params_to_json(doc.params)},
         {"basis", basis_to_json(*doc.basis)},
         {"F_coeffs", to_json(doc.F_coeffs)},
         {"b", to_json(doc.b)},
         {"eval_matrix", to_json(doc.eval_matrix)},
         {"gram_rank", doc.gram_rank},
         {"gram_eigenvalues", to_json(doc.gram_eigenvalues)},
         {"gram_asymmetry", doc.gram_asymmetry}};
  if (doc.tensors) {
    const SecTensors& t = *doc.tensors;
    j["tensors"] = json{{"c", tensor_to_json(t.c)},
                        {"g", tensor_to_json(t.g)},
                        {"d", tensor_to_json(t.d.raw())},
                        {"gram", to_json(t.gram)},
                        {"v_hat", to_json(t.v_hat)}};
  }
  return j;
}

ModelDocument model_from_json(const json& j) {
  check_schema(j, kModelSchema);
  ModelDocument doc;
  doc.params = params_from_json(field_of(j, "params"));
  try {
    doc.params.validate();
  } catch (const Error& e) {
    malformed(std::string("invalid resolution parameters: ") + e.what());
  }
  auto basis = std::make_shared<DiffusionBasis>(basis_from_json(field_of(j, "basis")));
  if (basis->n_eigs() < doc.params.required_eigs())
    malformed("basis has fewer eigenpairs than the resolution requires");
  doc.basis = basis;
  const Eigen::Index d = basis->dim_ambient();
  const ResolutionParams& p = doc.params;
  doc.F_coeffs = matrix_from_json(field_of(j, "F_coeffs"));
  expect_shape(doc.F_coeffs, p.L1, d, "F_coeffs");
  doc.b = matrix_from_json(field_of(j, "b"));
  expect_shape(doc.b, p.L, p.J, "b");
  doc.eval_matrix = matrix_from_json(field_of(j, "eval_matrix"));
  expect_shape(doc.eval_matrix, d, p.L2, "eval_matrix");
  doc.gram_rank = integer(j, "gram_rank");
  doc.gram_eigenvalues = vector_from_json(field_of(j, "gram_eigenvalues"));
  doc.gram_asymmetry = number(j, "gram_asymmetry");

  if (auto it = j.find("tensors"); it != j.end()) {
    SecTensors t;
    t.params = p;
    t.c = tensor_from_json<3>(field_of(*it, "c"));
    t.g = tensor_from_json<3>(field_of(*it, "g"));
    Tensor4 raw = tensor_from_json<4>(field_of(*it, "d"));
    if (raw.extent(0) != p.L || raw.extent(1) != p.J || raw.extent(2) != p.L1 ||
        raw.extent(3) != p.L2)
      malformed("d tensor shape does not match the resolution parameters");
    t.d = FrameCoefficients(p.L, p.J, p.L1, p.L2);
    std::copy(raw.data(), raw.data() + raw.size(), t.d.matrix().data());
    t.gram = matrix_from_json(field_of(*it, "gram"));
    t.v_hat = vector_from_json(field_of(*it, "v_hat"));
    t.gram_asymmetry = doc.gram_asymmetry;
    t.F_coeffs = doc.F_coeffs;
    doc.tensors = std::move(t);
  }
  return doc;
}

std::string format_model(const ModelDocument& doc) { return model_to_json(doc).dump() + "\n"; }

ModelDocument parse_model(const std::string& text) { return model_from_json(parse_json(text)); }

void write_model(const ModelDocument& doc, const std::filesystem::path& path) {
  write_file_atomic(path, format_model(doc));
}

ModelDocument read_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

}  // namespace secfield
