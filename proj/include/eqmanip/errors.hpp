#pragma once

#include <stdexcept>
#include <string>

namespace eqmanip {

// Point cloud ended up empty where at least one point is required.
struct EmptyCloudError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Camera pose leaves the scene invisible (no foreground pixels at reset).
struct InvalidViewpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Loss became non-finite during optimization.
struct TrainingDivergedError : std::runtime_error {
  TrainingDivergedError(const std::string& what, long step_index)
      : std::runtime_error(what), step(step_index) {}
  long step;
};

// Scripted expert cannot solve the task reliably; the task setup is broken.
struct TaskMisconfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace eqmanip
