#include "cnnaa/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace cnnaa {

namespace {

int read_ppm_int(std::istream& in) {
    // skips whitespace and '#' comments per the netpbm grammar
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) throw FormatError("ppm: expected integer");
    int v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = in.get();
    }
    return v;
}

}  // namespace

Tensor load_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open image: " + path);
    char m0 = 0, m1 = 0;
    f.get(m0);
    f.get(m1);
    if (m0 != 'P' || m1 != '6') throw FormatError("ppm: not a P6 file: " + path);
    const int w = read_ppm_int(f);
    const int h = read_ppm_int(f);
    const int maxval = read_ppm_int(f);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
        throw FormatError("ppm: unsupported header in " + path);
    }
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(f.gcount()) != raw.size()) {
        throw FormatError("ppm: truncated pixel data in " + path);
    }
    Tensor img({h, w, 3});
    const float scale = 1.0f / static_cast<float>(maxval);
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] * scale;
    return img;
}

void save_ppm(const Tensor& image, const std::string& path) {
    if (image.rank() != 3 || image.dim(2) != 3) {
        throw ShapeError("save_ppm: image must be h x w x 3");
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open image for writing: " + path);
    f << "P6\n" << image.dim(1) << " " << image.dim(0) << "\n255\n";
    std::vector<unsigned char> raw(image.numel());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const float v = std::clamp(image.data[i], 0.0f, 1.0f);
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    f.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!f) throw FormatError("failed writing image: " + path);
}

}  // namespace cnnaa
