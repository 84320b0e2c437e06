#ifndef GRAPHDECONV_ERRORS_HPP
#define GRAPHDECONV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace graphdeconv {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotDiagonalizable : Error { using Error::Error; };
struct GenerationFailed : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct AllColumnsZero : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };
struct Infeasible : Error { using Error::Error; };
struct ZeroInput : Error { using Error::Error; };
struct ZeroMatrix : Error { using Error::Error; };
struct ZeroFilter : Error { using Error::Error; };
struct InconsistentSideInfo : Error { using Error::Error; };
struct NumericalBreakdown : Error { using Error::Error; };
struct InvalidProgram : Error { using Error::Error; };
struct InvalidConfig : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace graphdeconv

#endif
