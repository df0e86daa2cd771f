#pragma once

#include "podrom/fe_space.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

namespace podrom
{

/// Little helpers for the binary containers: a magic tag, then fixed-width
/// scalars and length-prefixed arrays in native byte order.
class BinaryWriter
{
public:
  explicit BinaryWriter(std::ostream &out);

  void magic(const std::string &tag);
  void u64(std::uint64_t v);
  void i64(std::int64_t v);
  void f64(double v);
  void vector(const Eigen::VectorXd &v);
  void matrix(const Eigen::MatrixXd &m);

private:
  std::ostream &out_;
};

class BinaryReader
{
public:
  explicit BinaryReader(std::istream &in);

  /// Throws ValidationError when the next bytes are not `tag`.
  void            magic(const std::string &tag);
  std::uint64_t   u64();
  std::int64_t    i64();
  double          f64();
  Eigen::VectorXd vector();
  Eigen::MatrixXd matrix();

private:
  void          read(char *dst, std::size_t n);
  std::istream &in_;
};

/// FEField record: space signature, DOF count, coefficients.
void    write_field(const FEField &field, std::ostream &out);
FEField read_field(std::shared_ptr<const FESpace> space, std::istream &in);

/// File helpers that throw ValidationError with the path on failure.
std::ofstream open_output(const std::filesystem::path &path, bool binary = false);
std::ifstream open_input(const std::filesystem::path &path, bool binary = false);

} // namespace podrom
