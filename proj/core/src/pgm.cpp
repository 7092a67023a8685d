#include "gfsl/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "gfsl/error.hpp"

namespace gfsl {

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in, const char* field, const std::string& path) {
    std::string token;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            // skip
        } else {
            break;
        }
        c = in.get();
    }
    while (c != EOF && !std::isspace(c)) {
        token.push_back(static_cast<char>(c));
        c = in.get();
    }
    if (token.empty()) {
        throw ParseError(path + ": missing PGM " + std::string(field));
    }
    return token;
}

int parse_positive_int(const std::string& token, const char* field, const std::string& path) {
    int value = 0;
    for (char c : token) {
        if (c < '0' || c > '9') {
            throw ParseError(path + ": PGM " + std::string(field) + " is not a number: '" + token +
                             "'");
        }
        value = value * 10 + (c - '0');
        if (value > 1 << 24) {
            throw ParseError(path + ": PGM " + std::string(field) + " out of range: '" + token +
                             "'");
        }
    }
    if (value < 1) {
        throw ParseError(path + ": PGM " + std::string(field) + " must be positive, got " + token);
    }
    return value;
}

}  // namespace

Tensor load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    const std::string name = path.string();

    const std::string magic = next_token(in, "magic", name);
    if (magic != "P5") {
        throw ParseError(name + ": PGM magic must be 'P5' (binary), got '" + magic + "'");
    }
    const int width = parse_positive_int(next_token(in, "width", name), "width", name);
    const int height = parse_positive_int(next_token(in, "height", name), "height", name);
    const std::string maxval_token = next_token(in, "maxval", name);
    const int maxval = parse_positive_int(maxval_token, "maxval", name);
    if (maxval > 255) {
        throw ParseError(name + ": PGM maxval must be <= 255, got " + maxval_token);
    }
    // next_token consumed exactly one whitespace byte after maxval; the raw
    // payload starts here.
    std::vector<char> raw(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw ParseError(name + ": truncated PGM payload, expected " + std::to_string(raw.size()) +
                         " bytes, got " + std::to_string(in.gcount()));
    }

    Tensor image({1, height, width});
    // Exact per-value division (a reciprocal multiply can be off by one ulp,
    // which would break the quantized round-trip guarantee).
    float lut[256];
    for (int k = 0; k <= maxval; ++k) {
        lut[k] = static_cast<float>(k) / static_cast<float>(maxval);
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const unsigned char byte = static_cast<unsigned char>(raw[i]);
        if (byte > maxval) {
            throw ParseError(name + ": pixel value " + std::to_string(byte) + " exceeds maxval " +
                             std::to_string(maxval));
        }
        image[i] = lut[byte];
    }
    return image;
}

void write_pgm(const Tensor& image, const std::filesystem::path& path) {
    int height = 0, width = 0;
    if (image.rank() == 3 && image.dim(0) == 1) {
        height = image.dim(1);
        width = image.dim(2);
    } else if (image.rank() == 2) {
        height = image.dim(0);
        width = image.dim(1);
    } else {
        throw ShapeError("write_pgm: image must be 1xHxW or HxW, got " + image.shape_str());
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "P5\n" << width << " " << height << "\n255\n";
    std::vector<char> raw(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const float v = std::clamp(image[i], 0.0f, 1.0f);
        raw[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f)));
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out) {
        throw IoError("failed writing payload to " + path.string());
    }
}

}  // namespace gfsl
