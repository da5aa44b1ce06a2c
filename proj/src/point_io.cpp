#include "skelpt/point_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace skelpt {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path.string());
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open file for writing: " + path.string());
    }
    return out;
}

PointCloud to_cloud(const std::vector<Vec3>& pts, const std::filesystem::path& path) {
    if (pts.empty()) {
        throw std::runtime_error("no points found in " + path.string());
    }
    PointCloud cloud(static_cast<Eigen::Index>(pts.size()), 3);
    for (size_t i = 0; i < pts.size(); ++i) {
        cloud.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
    }
    return cloud;
}

// Shortest representation that round-trips a double.
void append_double(std::string& s, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    s += buf;
}

void append_point_line(std::string& s, const PointCloud& cloud, Eigen::Index i, const char* prefix) {
    s += prefix;
    append_double(s, cloud(i, 0));
    s += ' ';
    append_double(s, cloud(i, 1));
    s += ' ';
    append_double(s, cloud(i, 2));
    s += '\n';
}

}  // namespace

PointCloud read_obj(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<Vec3> pts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.size() < 2 || line[0] != 'v' || !std::isspace(static_cast<unsigned char>(line[1]))) {
            continue;  // only vertex lines; vn/vt/f are ignored
        }
        std::istringstream ss(line.substr(1));
        double x, y, z;
        if (!(ss >> x >> y >> z)) {
            throw std::runtime_error("malformed OBJ vertex line in " + path.string() + ": " + line);
        }
        pts.emplace_back(x, y, z);
    }
    return to_cloud(pts, path);
}

PointCloud read_ply(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply") {
        throw std::runtime_error("not a PLY file: " + path.string());
    }

    long vertex_count = -1;
    int prop_count = 0;
    int ix = -1, iy = -1, iz = -1;
    bool in_vertex_element = false;
    bool ascii = false;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "format") {
            std::string fmt;
            ss >> fmt;
            ascii = (fmt == "ascii");
        } else if (tok == "element") {
            std::string name;
            long count;
            ss >> name >> count;
            in_vertex_element = (name == "vertex");
            if (in_vertex_element) vertex_count = count;
        } else if (tok == "property" && in_vertex_element) {
            std::string type, name;
            ss >> type >> name;
            if (type == "list") {
                throw std::runtime_error("list property on vertex element unsupported: " + path.string());
            }
            if (name == "x") ix = prop_count;
            if (name == "y") iy = prop_count;
            if (name == "z") iz = prop_count;
            ++prop_count;
        } else if (tok == "end_header") {
            break;
        }
    }
    if (!ascii) {
        throw std::runtime_error("only ascii PLY supported: " + path.string());
    }
    if (vertex_count < 0 || ix < 0 || iy < 0 || iz < 0) {
        throw std::runtime_error("PLY header missing vertex x/y/z properties: " + path.string());
    }

    std::vector<Vec3> pts;
    pts.reserve(static_cast<size_t>(vertex_count));
    std::vector<double> vals(static_cast<size_t>(prop_count));
    for (long v = 0; v < vertex_count; ++v) {
        if (!std::getline(in, line)) {
            throw std::runtime_error("PLY truncated before all vertices read: " + path.string());
        }
        std::istringstream ss(line);
        for (int p = 0; p < prop_count; ++p) {
            if (!(ss >> vals[static_cast<size_t>(p)])) {
                throw std::runtime_error("malformed PLY vertex line in " + path.string() + ": " + line);
            }
        }
        pts.emplace_back(vals[static_cast<size_t>(ix)], vals[static_cast<size_t>(iy)],
                         vals[static_cast<size_t>(iz)]);
    }
    // trailing elements (faces etc.) are ignored
    return to_cloud(pts, path);
}

PointCloud read_xyz(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<Vec3> pts;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        double x, y, z;
        if (!(ss >> x >> y >> z)) {
            throw std::runtime_error("malformed XYZ line in " + path.string() + ": " + line);
        }
        pts.emplace_back(x, y, z);
    }
    return to_cloud(pts, path);
}

PointCloud read_point_file(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".obj") return read_obj(path);
    if (ext == ".ply") return read_ply(path);
    return read_xyz(path);
}

void write_obj(const std::filesystem::path& path, const PointCloud& cloud) {
    auto out = open_output(path);
    std::string buf;
    buf.reserve(static_cast<size_t>(cloud.rows()) * 48);
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
        append_point_line(buf, cloud, i, "v ");
    }
    out << buf;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
    auto out = open_output(path);
    std::string buf;
    buf += "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.rows()) +
           "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    buf.reserve(buf.size() + static_cast<size_t>(cloud.rows()) * 48);
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
        append_point_line(buf, cloud, i, "");
    }
    out << buf;
}

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
    auto out = open_output(path);
    std::string buf;
    buf.reserve(static_cast<size_t>(cloud.rows()) * 48);
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
        append_point_line(buf, cloud, i, "");
    }
    out << buf;
}

}  // namespace skelpt
