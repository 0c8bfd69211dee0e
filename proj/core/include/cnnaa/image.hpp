#pragma once

#include <string>

#include "cnnaa/tensor.hpp"

namespace cnnaa {

// Frames and crops travel as binary PPM (P6, 8-bit). Pixels map to floats in
// [0,1], tensor layout h x w x 3.

Tensor load_ppm(const std::string& path);
void save_ppm(const Tensor& image, const std::string& path);

}  // namespace cnnaa
