#include "podrom/io.hpp"

#include "podrom/errors.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace podrom
{

BinaryWriter::BinaryWriter(std::ostream &out)
  : out_(out)
{}

void BinaryWriter::magic(const std::string &tag)
{
  out_.write(tag.data(), static_cast<std::streamsize>(tag.size()));
}

void BinaryWriter::u64(std::uint64_t v)
{
  out_.write(reinterpret_cast<const char *>(&v), sizeof v);
}

void BinaryWriter::i64(std::int64_t v)
{
  out_.write(reinterpret_cast<const char *>(&v), sizeof v);
}

void BinaryWriter::f64(double v)
{
  out_.write(reinterpret_cast<const char *>(&v), sizeof v);
}

void BinaryWriter::vector(const Eigen::VectorXd &v)
{
  u64(static_cast<std::uint64_t>(v.size()));
  out_.write(reinterpret_cast<const char *>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void BinaryWriter::matrix(const Eigen::MatrixXd &m)
{
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  out_.write(reinterpret_cast<const char *>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

BinaryReader::BinaryReader(std::istream &in)
  : in_(in)
{}

void BinaryReader::read(char *dst, std::size_t n)
{
  in_.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n)
    throw ValidationError("binary reader: unexpected end of input");
}

void BinaryReader::magic(const std::string &tag)
{
  std::string got(tag.size(), '\0');
  read(got.data(), got.size());
  if (got != tag)
    throw ValidationError("binary reader: expected a '" + tag + "' record");
}

std::uint64_t BinaryReader::u64()
{
  std::uint64_t v = 0;
  read(reinterpret_cast<char *>(&v), sizeof v);
  return v;
}

std::int64_t BinaryReader::i64()
{
  std::int64_t v = 0;
  read(reinterpret_cast<char *>(&v), sizeof v);
  return v;
}

double BinaryReader::f64()
{
  double v = 0;
  read(reinterpret_cast<char *>(&v), sizeof v);
  return v;
}

Eigen::VectorXd BinaryReader::vector()
{
  const auto n = u64();
  if (n > (1ull << 32))
    throw ValidationError("binary reader: implausible vector length");
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  read(reinterpret_cast<char *>(v.data()), n * sizeof(double));
  return v;
}

Eigen::MatrixXd BinaryReader::matrix()
{
  const auto rows = u64();
  const auto cols = u64();
  if (rows > (1ull << 32) || cols > (1ull << 32) || rows * cols > (1ull << 34))
    throw ValidationError("binary reader: implausible matrix size");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  read(reinterpret_cast<char *>(m.data()), rows * cols * sizeof(double));
  return m;
}

void write_field(const FEField &field, std::ostream &out)
{
  BinaryWriter w(out);
  w.magic("PRFIELD1");
  w.u64(field.space->signature());
  w.vector(field.coefficients);
}

FEField read_field(std::shared_ptr<const FESpace> space, std::istream &in)
{
  BinaryReader r(in);
  r.magic("PRFIELD1");
  if (r.u64() != space->signature())
    throw ValidationError("read_field: space signature mismatch");
  Eigen::VectorXd c = r.vector();
  return FEField(std::move(space), std::move(c));
}

std::ofstream open_output(const std::filesystem::path &path, bool binary)
{
  std::ofstream out(path, binary ? std::ios::binary | std::ios::out : std::ios::out);
  if (!out)
    throw ValidationError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_input(const std::filesystem::path &path, bool binary)
{
  std::ifstream in(path, binary ? std::ios::binary | std::ios::in : std::ios::in);
  if (!in)
    throw ValidationError("cannot open '" + path.string() + "' for reading");
  return in;
}

} // namespace podrom
