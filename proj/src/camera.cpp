#include "fdlab/camera.hpp"

#include <cmath>
#include <string>

#include "fdlab/error.hpp"

namespace fdlab {

CameraRig::CameraRig(double focal_x, double baseline) : focal_x_(focal_x), baseline_(baseline) {
  if (!(std::isfinite(focal_x) && focal_x > 0.0) || !(std::isfinite(baseline) && baseline > 0.0)) {
    throw Error(ErrorKind::Domain,
                "camera rig needs focal_x > 0 and baseline > 0, got " + std::to_string(focal_x) + ", " +
                    std::to_string(baseline));
  }
}

}  // namespace fdlab
