#include "prism/image.hpp"

#include <fstream>
#include <string>

namespace prism {

namespace {

// Skips whitespace and '#' comment lines, then reads one ASCII decimal.
int read_pnm_int(std::istream& is, const std::string& what) {
    int c = is.peek();
    while (c != EOF) {
        if (c == '#') {
            std::string line;
            std::getline(is, line);
        } else if (std::isspace(c)) {
            is.get();
        } else {
            break;
        }
        c = is.peek();
    }
    int v = 0;
    bool any = false;
    while ((c = is.peek()) != EOF && c >= '0' && c <= '9') {
        v = v * 10 + (is.get() - '0');
        any = true;
        if (v > 1 << 28) throw ParseError(what + ": absurd header value");
    }
    if (!any) throw ParseError(what + ": expected decimal in PNM header");
    return v;
}

PnmHeader parse_header(std::istream& is, const std::string& what) {
    char m0 = static_cast<char>(is.get());
    char m1 = static_cast<char>(is.get());
    if (!is || m0 != 'P' || (m1 != '5' && m1 != '6'))
        throw ParseError(what + ": not a binary PGM/PPM (P5/P6) file");
    PnmHeader h;
    h.channels = (m1 == '5') ? 1 : 3;
    h.width = read_pnm_int(is, what);
    h.height = read_pnm_int(is, what);
    int maxval = read_pnm_int(is, what);
    if (h.width <= 0 || h.height <= 0) throw ParseError(what + ": non-positive dimensions");
    if (maxval <= 0 || maxval > 255) throw ParseError(what + ": only 8-bit samples supported");
    int sep = is.get(); // single whitespace before raster
    if (sep == EOF || !std::isspace(sep)) throw ParseError(what + ": malformed header");
    return h;
}

} // namespace

PnmHeader read_pnm_header(std::istream& is, const std::string& what) {
    return parse_header(is, what);
}

RasterImage read_pnm(std::istream& is, const std::string& what) {
    PnmHeader h = parse_header(is, what);
    RasterImage img;
    img.width = h.width;
    img.height = h.height;
    img.channels = h.channels;
    size_t n = static_cast<size_t>(h.width) * h.height * h.channels;
    img.pixels.resize(n);
    is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(is.gcount()) != n)
        throw ParseError(what + ": truncated raster data");
    return img;
}

RasterImage read_pnm_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFile("cannot open image: " + path.string());
    return read_pnm(is, path.string());
}

PnmHeader read_pnm_header_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFile("cannot open image: " + path.string());
    return read_pnm_header(is, path.string());
}

void write_pnm(std::ostream& os, const RasterImage& img) {
    os << (img.channels == 1 ? "P5" : "P6") << "\n"
       << img.width << " " << img.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.pixels.data()),
             static_cast<std::streamsize>(img.pixels.size()));
}

void write_pnm_file(const std::filesystem::path& path, const RasterImage& img) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write image: " + path.string());
    write_pnm(os, img);
}

} // namespace prism
