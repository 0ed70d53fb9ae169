#include "dirac/error.hpp"

namespace dirac {

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config:
      return 2;
    case ErrorKind::data_format:
      return 3;
    case ErrorKind::protocol:
      return 4;
    case ErrorKind::numerical:
      return 5;
  }
  return 1;
}

}  // namespace dirac
