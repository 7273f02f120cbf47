#ifndef ZSSCENE_CORE_ERROR_HPP
#define ZSSCENE_CORE_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zsscene
{
  // Bad input, bad configuration, violated precondition. Maps to exit code 2.
  class InvalidArgument : public std::invalid_argument
  {
  public:
    using std::invalid_argument::invalid_argument;
  };

  // Incompatible tensor shapes for an op.
  class ShapeError : public InvalidArgument
  {
  public:
    ShapeError(const std::string& op, std::size_t lr, std::size_t lc, std::size_t rr, std::size_t rc)
      : InvalidArgument(op + ": shape mismatch " + dims(lr, lc) + " vs " + dims(rr, rc)),
        op_(op) {}

    ShapeError(const std::string& op, const std::string& what)
      : InvalidArgument(op + ": " + what), op_(op) {}

    const std::string& op() const noexcept { return op_; }

    static std::string dims(std::size_t r, std::size_t c)
    {
      return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
    }

  private:
    std::string op_;
  };

  // NaN, infinity, or an undefined value such as normalizing a zero vector.
  // Maps to exit code 3.
  class NumericError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };
}

#endif
