#ifndef SEMWT_ERRORS_HPP
#define SEMWT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace semwt {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InversionFailure : std::runtime_error {
  InversionFailure(const std::string& msg, int iter)
      : std::runtime_error(msg), iteration(iter) {}
  int iteration;
};

struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(const std::string& msg, int epoch_idx, int batch_idx)
      : std::runtime_error(msg), epoch(epoch_idx), batch(batch_idx) {}
  int epoch;
  int batch;
};

}  // namespace semwt

#endif  // SEMWT_ERRORS_HPP
