#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mif/binio.hpp"
#include "mif/meshing.hpp"

namespace mif {

void write_mesh_obj(const Mesh& mesh, const std::string& path, const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("io-error: cannot write " + path);
    if (!comment.empty()) out << "# " << comment << "\n";
    char buf[128];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    if (!out) throw std::runtime_error("io-error: write failed for " + path);
}

void write_mesh_ply(const Mesh& mesh, const std::string& path, const std::string& comment) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("io-error: cannot write " + path);
    out << "ply\nformat binary_little_endian 1.0\n";
    if (!comment.empty()) out << "comment " << comment << "\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "element face " << mesh.triangles.size() << "\n";
    out << "property list uchar uint vertex_indices\n";
    out << "end_header\n";

    auto put = [&](auto v) {
        if (!detail::host_little_endian()) v = detail::byteswap(v);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    for (const auto& v : mesh.vertices) {
        put(v.x);
        put(v.y);
        put(v.z);
    }
    for (const auto& t : mesh.triangles) {
        put(std::uint8_t(3));
        put(t[0]);
        put(t[1]);
        put(t[2]);
    }
    if (!out) throw std::runtime_error("io-error: write failed for " + path);
}

void write_mesh(const Mesh& mesh, const std::string& path, const std::string& comment) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".obj")
        write_mesh_obj(mesh, path, comment);
    else
        write_mesh_ply(mesh, path, comment);
}

namespace {

Mesh read_mesh_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("io-error: cannot open " + path);
    Mesh mesh;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.size() < 2) continue;
        if (line[0] == 'v' && line[1] == ' ') {
            std::istringstream ss(line.substr(2));
            Point3 p;
            if (!(ss >> p.x >> p.y >> p.z))
                throw std::runtime_error("format-error: bad obj vertex at line " +
                                         std::to_string(lineno));
            mesh.vertices.push_back(p);
        } else if (line[0] == 'f' && line[1] == ' ') {
            std::istringstream ss(line.substr(2));
            std::vector<std::uint32_t> idx;
            std::string tok;
            while (ss >> tok) {
                // "i", "i/t", "i/t/n" all start with the vertex index
                idx.push_back(std::uint32_t(std::stoul(tok.substr(0, tok.find('/')))) - 1);
            }
            if (idx.size() < 3)
                throw std::runtime_error("format-error: face with <3 vertices at line " +
                                         std::to_string(lineno));
            for (std::size_t i = 2; i < idx.size(); ++i)  // fan-triangulate
                mesh.triangles.push_back({idx[0], idx[i - 1], idx[i]});
        }
    }
    return mesh;
}

Mesh read_mesh_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("io-error: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply")
        throw std::runtime_error("format-error: not a ply file: " + path);

    bool binary = false;
    struct Prop {
        bool list = false;
        std::string type, count_type, item_type, name;
    };
    struct Elem {
        std::string name;
        std::size_t count = 0;
        std::vector<Prop> props;
    };
    std::vector<Elem> elems;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "format") {
            std::string f;
            ss >> f;
            binary = (f == "binary_little_endian");
            if (f != "binary_little_endian" && f != "ascii")
                throw std::runtime_error("format-error: unsupported ply format " + f);
        } else if (tok == "element") {
            Elem e;
            ss >> e.name >> e.count;
            elems.push_back(e);
        } else if (tok == "property") {
            Prop p;
            ss >> p.type;
            if (p.type == "list") {
                p.list = true;
                ss >> p.count_type >> p.item_type >> p.name;
            } else {
                ss >> p.name;
            }
            elems.back().props.push_back(p);
        } else if (tok == "end_header") {
            break;
        }
    }

    auto scalar_size = [](const std::string& t) -> std::size_t {
        if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
        if (t == "short" || t == "ushort") return 2;
        if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" ||
            t == "float32")
            return 4;
        return 8;
    };
    auto read_scalar = [&](const std::string& t) -> double {
        auto rd = [&](auto v) {
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            if (!detail::host_little_endian()) v = detail::byteswap(v);
            return double(v);
        };
        if (t == "float" || t == "float32") return rd(float{});
        if (t == "double" || t == "float64") return rd(double{});
        if (t == "uchar" || t == "uint8") return rd(std::uint8_t{});
        if (t == "char" || t == "int8") return rd(std::int8_t{});
        if (t == "short") return rd(std::int16_t{});
        if (t == "ushort") return rd(std::uint16_t{});
        if (t == "int" || t == "int32") return rd(std::int32_t{});
        if (t == "uint" || t == "uint32") return rd(std::uint32_t{});
        throw std::runtime_error("format-error: ply scalar type " + t);
    };

    Mesh mesh;
    for (const auto& el : elems) {
        if (el.name == "vertex") {
            int xi = -1, yi = -1, zi = -1;
            for (std::size_t i = 0; i < el.props.size(); ++i) {
                if (el.props[i].name == "x") xi = int(i);
                if (el.props[i].name == "y") yi = int(i);
                if (el.props[i].name == "z") zi = int(i);
            }
            if (xi < 0 || yi < 0 || zi < 0)
                throw std::runtime_error("format-error: ply vertex lacks x/y/z");
            mesh.vertices.resize(el.count);
            for (std::size_t v = 0; v < el.count; ++v) {
                std::vector<double> vals(el.props.size());
                if (binary) {
                    for (std::size_t i = 0; i < el.props.size(); ++i)
                        vals[i] = read_scalar(el.props[i].type);
                } else {
                    if (!std::getline(in, line))
                        throw std::runtime_error("format-error: truncated ply");
                    std::istringstream ss(line);
                    for (auto& x : vals) ss >> x;
                }
                mesh.vertices[v] = {vals[std::size_t(xi)], vals[std::size_t(yi)],
                                    vals[std::size_t(zi)]};
            }
        } else if (el.name == "face") {
            for (std::size_t f = 0; f < el.count; ++f) {
                std::vector<std::uint32_t> idx;
                if (binary) {
                    const auto& p = el.props.at(0);
                    auto n = std::size_t(read_scalar(p.count_type));
                    idx.resize(n);
                    for (auto& v : idx) v = std::uint32_t(read_scalar(p.item_type));
                } else {
                    if (!std::getline(in, line))
                        throw std::runtime_error("format-error: truncated ply");
                    std::istringstream ss(line);
                    std::size_t n;
                    ss >> n;
                    idx.resize(n);
                    for (auto& v : idx) ss >> v;
                }
                for (std::size_t i = 2; i < idx.size(); ++i)
                    mesh.triangles.push_back({idx[0], idx[i - 1], idx[i]});
            }
        } else {
            // Skip unknown elements (fixed-size scalar records only).
            if (binary) {
                std::size_t rec = 0;
                for (const auto& p : el.props) {
                    if (p.list)
                        throw std::runtime_error(
                            "format-error: cannot skip list element in binary ply");
                    rec += scalar_size(p.type);
                }
                in.seekg(std::streamoff(rec * el.count), std::ios::cur);
            } else {
                for (std::size_t i = 0; i < el.count; ++i) std::getline(in, line);
            }
        }
    }
    return mesh;
}

}  // namespace

Mesh read_mesh(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".obj") return read_mesh_obj(path);
    return read_mesh_ply(path);
}

}  // namespace mif
