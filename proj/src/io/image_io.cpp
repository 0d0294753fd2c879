#include "dstnet/io/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace dstnet {

namespace {

bool ends_with_ci(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    for (size_t i = 0; i < suffix.size(); ++i) {
        const char a = static_cast<char>(std::tolower(s[s.size() - suffix.size() + i]));
        if (a != suffix[i]) return false;
    }
    return true;
}

Image planar_from_rgb8(const std::vector<unsigned char>& buf, int h, int w) {
    Tensor t({3, h, w});
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    for (std::int64_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c)
            t[c * plane + p] = buf[static_cast<size_t>(3 * p + c)] / 255.0;
    return Image::from_tensor(std::move(t));
}

std::vector<unsigned char> rgb8_from_planar(const Image& img) {
    const std::int64_t plane = static_cast<std::int64_t>(img.height()) * img.width();
    std::vector<unsigned char> buf(static_cast<size_t>(3 * plane));
    for (std::int64_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c) {
            const double v = std::clamp(img.rgb[c * plane + p], 0.0, 1.0);
            buf[static_cast<size_t>(3 * p + c)] =
                static_cast<unsigned char>(std::lround(v * 255.0));
        }
    return buf;
}

Image load_png(const std::string& path) {
    png_image pim{};
    pim.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&pim, path.c_str()))
        throw std::runtime_error("failed to open PNG: " + path);
    pim.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> buf(PNG_IMAGE_SIZE(pim));
    if (!png_image_finish_read(&pim, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&pim);
        throw std::runtime_error("failed to decode PNG: " + path);
    }
    return planar_from_rgb8(buf, static_cast<int>(pim.height), static_cast<int>(pim.width));
}

void save_png(const std::string& path, const Image& img) {
    png_image pim{};
    pim.version = PNG_IMAGE_VERSION;
    pim.width = static_cast<png_uint_32>(img.width());
    pim.height = static_cast<png_uint_32>(img.height());
    pim.format = PNG_FORMAT_RGB;
    const std::vector<unsigned char> buf = rgb8_from_planar(img);
    if (!png_image_write_to_file(&pim, path.c_str(), 0, buf.data(), 0, nullptr))
        throw std::runtime_error("failed to write PNG: " + path);
}

struct JpegErrorMgr {
    jpeg_error_mgr base;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image load_jpeg(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("failed to open JPEG: " + path);

    jpeg_decompress_struct cinfo{};
    JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error("failed to decode JPEG: " + path);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    const int w = static_cast<int>(cinfo.output_width);
    const int h = static_cast<int>(cinfo.output_height);
    std::vector<unsigned char> buf(static_cast<size_t>(3) * w * h);
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row = buf.data() + static_cast<size_t>(3) * w * cinfo.output_scanline;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return planar_from_rgb8(buf, h, w);
}

void save_jpeg(const std::string& path, const Image& img) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("failed to open for write: " + path);

    jpeg_compress_struct cinfo{};
    JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        throw std::runtime_error("failed to encode JPEG: " + path);
    }
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, f.get());
    cinfo.image_width = static_cast<JDIMENSION>(img.width());
    cinfo.image_height = static_cast<JDIMENSION>(img.height());
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, 95, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    const std::vector<unsigned char> buf = rgb8_from_planar(img);
    const int w = img.width();
    while (cinfo.next_scanline < cinfo.image_height) {
        const unsigned char* row = buf.data() + static_cast<size_t>(3) * w * cinfo.next_scanline;
        JSAMPROW rows[1] = {const_cast<unsigned char*>(row)};
        jpeg_write_scanlines(&cinfo, rows, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
}

}  // namespace

Image load_image(const std::string& path) {
    if (ends_with_ci(path, ".png")) return load_png(path);
    if (ends_with_ci(path, ".jpg") || ends_with_ci(path, ".jpeg")) return load_jpeg(path);
    throw std::runtime_error("unsupported image format: " + path);
}

void save_image(const std::string& path, const Image& img) {
    if (ends_with_ci(path, ".png")) {
        save_png(path, img);
        return;
    }
    if (ends_with_ci(path, ".jpg") || ends_with_ci(path, ".jpeg")) {
        save_jpeg(path, img);
        return;
    }
    throw std::runtime_error("unsupported image format: " + path);
}

}  // namespace dstnet
