#include "sot/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>
#include <type_traits>

#include "sot/error.hpp"

namespace sot {
namespace {

constexpr char kMagic[8] = {'S', 'O', 'T', 'M', 'O', 'D', 'E', 'L'};

template <typename T>
T to_little(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    value = to_little(value);
    const auto* p = reinterpret_cast<const char*>(&value);
    out_.append(p, sizeof(T));
  }
  void raw(const char* data, std::size_t n) { out_.append(data, n); }

  void matrix(const Eigen::MatrixXd& m) {
    put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.size(); ++k) put<double>(m.data()[k]);
  }
  void vector(const Eigen::VectorXd& v) {
    put<std::uint64_t>(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index k = 0; k < v.size(); ++k) put<double>(v(k));
  }
  void code(const SparseCode& c) {
    put<std::uint64_t>(static_cast<std::uint64_t>(c.atom_count()));
    put<std::uint64_t>(static_cast<std::uint64_t>(c.column_count()));
    for (const auto& col : c.columns()) {
      put<std::uint32_t>(static_cast<std::uint32_t>(col.size()));
      for (int idx : col.support) put<std::int32_t>(idx);
      for (double v : col.values) put<double>(v);
    }
  }

  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  template <typename T>
  T get(const char* what) {
    if (remaining() < sizeof(T)) fail(std::string("truncated while reading ") + what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(value);
  }

  void expect_bytes(const char* data, std::size_t n, const char* what) {
    if (remaining() < n || std::memcmp(bytes_.data() + pos_, data, n) != 0) {
      fail(std::string("bad ") + what);
    }
    pos_ += n;
  }

  Eigen::MatrixXd matrix(const char* what) {
    const auto rows = get<std::uint64_t>(what);
    const auto cols = get<std::uint64_t>(what);
    if (rows != 0 && cols > remaining() / sizeof(double) / rows) fail(std::string("oversized ") + what);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = get<double>(what);
    return m;
  }

  Eigen::VectorXd vector(const char* what) {
    const auto n = get<std::uint64_t>(what);
    if (n > remaining() / sizeof(double)) fail(std::string("oversized ") + what);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = get<double>(what);
    return v;
  }

  SparseCode code(const char* what) {
    const auto atoms = get<std::uint64_t>(what);
    const auto cols = get<std::uint64_t>(what);
    if (cols > remaining() / sizeof(std::uint32_t)) fail(std::string("oversized ") + what);
    std::vector<SparseColumn> columns(static_cast<std::size_t>(cols));
    for (auto& col : columns) {
      const auto k = get<std::uint32_t>(what);
      if (k > remaining() / (sizeof(std::int32_t) + sizeof(double))) fail(std::string("oversized ") + what);
      col.support.resize(k);
      col.values.resize(k);
      for (auto& idx : col.support) idx = get<std::int32_t>(what);
      for (auto& v : col.values) v = get<double>(what);
    }
    const std::size_t at = pos_;
    try {
      return SparseCode(static_cast<Eigen::Index>(atoms), std::move(columns));
    } catch (const Error& e) {
      throw ParseError(std::string("invalid ") + what + ": " + e.what(), at);
    }
  }

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, pos_); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

Dictionary checked_dictionary(Reader& in, const char* what) {
  const std::size_t at = in.offset();
  Eigen::MatrixXd atoms = in.matrix(what);
  try {
    return Dictionary(std::move(atoms));
  } catch (const Error& e) {
    throw ParseError(std::string("invalid ") + what + ": " + e.what(), at);
  }
}

}  // namespace

std::string encode_model(const TransferModel& model) {
  Writer out;
  out.raw(kMagic, sizeof(kMagic));
  out.put<std::uint32_t>(kModelFormatVersion);

  const FitConfig& c = model.config;
  out.put<std::int32_t>(c.patch_size);
  out.put<std::int32_t>(c.sample_count);
  out.put<std::int32_t>(c.dict_size);
  out.put<std::int32_t>(c.reference_dict_size);
  out.put<double>(c.omp_tol);
  out.put<std::int32_t>(c.omp_max_atoms);
  out.put<double>(c.lambda);
  out.put<double>(c.tau);
  out.put<double>(c.gamma);
  out.put<double>(c.eta);
  out.put<std::int32_t>(c.sinkhorn_iters);
  out.put<double>(c.sinkhorn_tol);
  out.put<std::int32_t>(c.outer_iters);
  out.put<double>(c.rel_loss_stop);
  out.put<std::uint64_t>(c.seed);
  out.put<std::uint8_t>(c.exact_ot ? 1 : 0);
  out.put<std::uint64_t>(c.exact_ot_max_cells);

  out.put<std::int32_t>(model.channels);
  out.matrix(model.dx.atoms());
  out.matrix(model.dy.atoms());
  out.code(model.code_x);
  out.code(model.code_y);
  out.vector(model.dist_x.raw);
  out.vector(model.dist_x.prob);
  out.vector(model.dist_y.raw);
  out.vector(model.dist_y.prob);
  out.matrix(model.cost.entries);
  out.matrix(model.plan.entries);
  out.vector(model.plan.row_marginal);
  out.vector(model.plan.col_marginal);
  out.put<std::int32_t>(model.plan.iterations);
  out.put<double>(model.plan.marginal_error);
  out.put<std::uint8_t>(model.plan.converged ? 1 : 0);

  out.put<std::uint64_t>(model.history.size());
  for (const auto& r : model.history) {
    out.put<std::int32_t>(r.iteration);
    out.put<double>(r.e_sp_x);
    out.put<double>(r.e_sp_y);
    out.put<double>(r.e_ot_a);
    out.put<double>(r.e_ot_b);
    out.put<double>(r.e_c);
  }
  return out.take();
}

TransferModel decode_model(const std::string& bytes) {
  Reader in(bytes);
  in.expect_bytes(kMagic, sizeof(kMagic), "magic header");
  const auto version = in.get<std::uint32_t>("format version");
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::unsupported_version, "model format version " + std::to_string(version) +
                                                    " is not supported (expected " +
                                                    std::to_string(kModelFormatVersion) + ")");
  }

  TransferModel model;
  FitConfig& c = model.config;
  c.patch_size = in.get<std::int32_t>("patch_size");
  c.sample_count = in.get<std::int32_t>("sample_count");
  c.dict_size = in.get<std::int32_t>("dict_size");
  c.reference_dict_size = in.get<std::int32_t>("reference_dict_size");
  c.omp_tol = in.get<double>("omp_tol");
  c.omp_max_atoms = in.get<std::int32_t>("omp_max_atoms");
  c.lambda = in.get<double>("lambda");
  c.tau = in.get<double>("tau");
  c.gamma = in.get<double>("gamma");
  c.eta = in.get<double>("eta");
  c.sinkhorn_iters = in.get<std::int32_t>("sinkhorn_iters");
  c.sinkhorn_tol = in.get<double>("sinkhorn_tol");
  c.outer_iters = in.get<std::int32_t>("outer_iters");
  c.rel_loss_stop = in.get<double>("rel_loss_stop");
  c.seed = in.get<std::uint64_t>("seed");
  c.exact_ot = in.get<std::uint8_t>("exact_ot") != 0;
  c.exact_ot_max_cells = in.get<std::uint64_t>("exact_ot_max_cells");

  model.channels = in.get<std::int32_t>("channels");
  model.dx = checked_dictionary(in, "content dictionary");
  model.dy = checked_dictionary(in, "reference dictionary");
  model.code_x = in.code("content code");
  model.code_y = in.code("reference code");
  model.dist_x.raw = in.vector("content row sums");
  model.dist_x.prob = in.vector("content distribution");
  model.dist_y.raw = in.vector("reference row sums");
  model.dist_y.prob = in.vector("reference distribution");
  model.cost.entries = in.matrix("cost matrix");
  model.plan.entries = in.matrix("transport plan");
  model.plan.row_marginal = in.vector("plan row marginal");
  model.plan.col_marginal = in.vector("plan column marginal");
  model.plan.iterations = in.get<std::int32_t>("plan iterations");
  model.plan.marginal_error = in.get<double>("plan marginal error");
  model.plan.converged = in.get<std::uint8_t>("plan converged flag") != 0;

  const auto records = in.get<std::uint64_t>("history length");
  if (records > in.remaining() / (sizeof(std::int32_t) + 5 * sizeof(double))) in.fail("oversized history");
  model.history.resize(static_cast<std::size_t>(records));
  for (auto& r : model.history) {
    r.iteration = in.get<std::int32_t>("history iteration");
    r.e_sp_x = in.get<double>("E_sp_x");
    r.e_sp_y = in.get<double>("E_sp_y");
    r.e_ot_a = in.get<double>("E_ot_a");
    r.e_ot_b = in.get<double>("E_ot_b");
    r.e_c = in.get<double>("E_c");
  }
  if (in.remaining() != 0) in.fail("trailing bytes after model");

  const Eigen::Index m = model.dx.size();
  const Eigen::Index n = model.dy.size();
  const bool consistent = model.channels >= 1 && model.dx.dim() == model.dy.dim() &&
                          model.code_x.atom_count() == m && model.code_y.atom_count() == n &&
                          model.dist_x.raw.size() == m && model.dist_x.prob.size() == m &&
                          model.dist_y.raw.size() == n && model.dist_y.prob.size() == n &&
                          model.cost.rows() == m && model.cost.cols() == n &&
                          model.plan.entries.rows() == m && model.plan.entries.cols() == n;
  if (!consistent) throw ParseError("model sections have inconsistent shapes", in.offset());
  return model;
}

void save_model(const TransferModel& model, const std::filesystem::path& path) {
  const std::string bytes = encode_model(model);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot open model file for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorCode::io_error, "failed writing model file: " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::io_error, "cannot move model file into place: " + path.string());
  }
}

TransferModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open model file: " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

}  // namespace sot
