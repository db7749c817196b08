#pragma once

#include "morphforge/warp/landmarks.hpp"

namespace morphforge::warp {

/// Mean frontal face in iBUG-68 order, mirror-symmetric about the vertical
/// midline, in unit coordinates (0.5 = frame centre).
LandmarkSet unit_face_template();

/// unit_face_template() mapped to pixel centres: p = u * size - 0.5.
LandmarkSet canonical_landmarks(int width, int height);

}  // namespace morphforge::warp
