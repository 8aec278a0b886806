#include "opocat/errors.hpp"
#include "opocat/fock_oracle.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace opocat {

namespace {

static_assert(std::endian::native == std::endian::little, "dump format assumes a little-endian host");

constexpr const char* kFormat = "opocat-density-matrix/1";

}  // namespace

void write_density_matrix(const std::filesystem::path& path, const FockDensityMatrix& rho) {
  const auto& b = rho.basis();
  nlohmann::json header = {
      {"format", kFormat},
      {"cutoffs", b.config().cutoffs},
      {"dim", b.dimension()},
      {"declared_trace", rho.declared_trace()},
      {"dtype", "complex128-le"},
      {"order", "row-major"},
  };
  const std::string h = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto len = static_cast<std::uint32_t>(h.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  const auto& m = rho.data();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v[2] = {m(i, j).real(), m(i, j).imag()};
      out.write(reinterpret_cast<const char*>(v), sizeof v);
    }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

FockDensityMatrix read_density_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || len > (1u << 20)) throw Error(ErrorCode::InvalidArgument, "bad density-matrix header length");
  std::string h(len, '\0');
  in.read(h.data(), len);
  const auto header = nlohmann::json::parse(h);
  if (header.value("format", "") != kFormat || header.value("dtype", "") != "complex128-le")
    throw Error(ErrorCode::InvalidArgument, "unrecognized density-matrix dump");

  FockBasisConfig cfg;
  cfg.cutoffs = header.at("cutoffs").get<std::vector<int>>();
  const auto dim = header.at("dim").get<Eigen::Index>();
  cfg.max_dimension = static_cast<std::size_t>(dim);
  FockBasis basis(cfg);
  if (basis.dimension() != dim) throw Error(ErrorCode::InvalidArgument, "dump dimension disagrees with cutoffs");

  Eigen::MatrixXcd m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) {
      double v[2];
      in.read(reinterpret_cast<char*>(v), sizeof v);
      m(i, j) = {v[0], v[1]};
    }
  if (!in) throw Error(ErrorCode::InvalidArgument, "truncated density-matrix dump");
  return {std::move(basis), std::move(m), header.at("declared_trace").get<double>()};
}

}  // namespace opocat
