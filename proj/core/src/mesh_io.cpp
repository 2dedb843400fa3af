#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "mtbem/geometry.hpp"

namespace mtbem {

namespace {

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& what) {
  throw MeshError(MeshError::Kind::MalformedFile, path.string() + ": malformed file: " + what);
}

// Triangles tagged by subdomain over a shared vertex pool; each group becomes
// one Mesh with its own compacted vertex list.
struct TaggedSoup {
  std::vector<Vec3> vertices;
  std::map<int, std::vector<Triangle>> groups;
};

Mesh compact(const std::vector<Vec3>& pool, const std::vector<Triangle>& tris) {
  std::map<int, int> remap;
  std::vector<Vec3> vertices;
  std::vector<Triangle> local;
  local.reserve(tris.size());
  for (const auto& t : tris) {
    Triangle u{};
    for (int i = 0; i < 3; ++i) {
      auto [it, inserted] = remap.try_emplace(t[i], static_cast<int>(vertices.size()));
      if (inserted) vertices.push_back(pool[t[i]]);
      u[i] = it->second;
    }
    local.push_back(u);
  }
  Mesh mesh(std::move(vertices), std::move(local));
  if (mesh.is_closed() && mesh.signed_volume() < 0.0) mesh = mesh.flipped();
  return mesh;
}

MultiMesh assemble(const TaggedSoup& soup) {
  std::vector<Mesh> meshes;
  for (const auto& [tag, tris] : soup.groups) meshes.push_back(compact(soup.vertices, tris));
  if (meshes.empty()) {
    throw MeshError(MeshError::Kind::MalformedFile, "mesh file contains no triangles");
  }
  return make_multimesh(std::move(meshes));
}

TaggedSoup read_off(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) malformed(path, "cannot open");
  // OFF allows '#' comments anywhere.
  std::stringstream body;
  for (std::string line; std::getline(in, line);) {
    body << line.substr(0, line.find('#')) << '\n';
  }
  std::string magic;
  body >> magic;
  if (magic != "OFF") malformed(path, "missing OFF header");
  long nv = -1, nf = -1, ne = -1;
  if (!(body >> nv >> nf >> ne) || nv < 0 || nf < 0) malformed(path, "bad counts");

  TaggedSoup soup;
  soup.vertices.resize(static_cast<std::size_t>(nv));
  for (auto& v : soup.vertices) {
    if (!(body >> v.x() >> v.y() >> v.z())) malformed(path, "truncated vertex list");
  }
  std::vector<Triangle> tris;
  std::vector<long> face_of;
  for (long f = 0; f < nf; ++f) {
    int n = 0;
    if (!(body >> n) || n < 3) malformed(path, "bad face " + std::to_string(f));
    std::vector<int> poly(static_cast<std::size_t>(n));
    for (auto& p : poly) {
      if (!(body >> p)) malformed(path, "truncated face " + std::to_string(f));
      if (p < 0 || p >= nv) {
        malformed(path, "face " + std::to_string(f) + " references missing vertex " + std::to_string(p));
      }
    }
    for (int i = 1; i + 1 < n; ++i) {
      tris.push_back({poly[0], poly[i], poly[i + 1]});
      face_of.push_back(f);
    }
  }

  std::vector<int> subdomain(static_cast<std::size_t>(nf), 0);
  const auto sidecar = std::filesystem::path(path.string() + ".json");
  if (std::filesystem::exists(sidecar)) {
    std::ifstream js(sidecar);
    nlohmann::json j;
    try {
      js >> j;
      subdomain = j.at("subdomain").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
      malformed(sidecar, e.what());
    }
    if (static_cast<long>(subdomain.size()) != nf) malformed(sidecar, "one subdomain per face expected");
  }
  for (std::size_t t = 0; t < tris.size(); ++t) soup.groups[subdomain[face_of[t]]].push_back(tris[t]);
  return soup;
}

TaggedSoup read_gmsh_v2(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) malformed(path, "cannot open");
  TaggedSoup soup;
  std::map<long, int> node_index;
  bool saw_format = false;
  bool saw_elements = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("$MeshFormat", 0) == 0) {
      double version = 0;
      int file_type = -1, data_size = 0;
      if (!(in >> version >> file_type >> data_size)) malformed(path, "bad $MeshFormat");
      if (version < 2.0 || version >= 3.0) malformed(path, "only msh version 2 is supported");
      if (file_type != 0) malformed(path, "only ASCII msh is supported");
      saw_format = true;
    } else if (line.rfind("$Nodes", 0) == 0) {
      long n = 0;
      if (!(in >> n) || n < 0) malformed(path, "bad $Nodes count");
      for (long i = 0; i < n; ++i) {
        long id = 0;
        Vec3 p;
        if (!(in >> id >> p.x() >> p.y() >> p.z())) malformed(path, "truncated $Nodes");
        node_index[id] = static_cast<int>(soup.vertices.size());
        soup.vertices.push_back(p);
      }
    } else if (line.rfind("$Elements", 0) == 0) {
      long n = 0;
      if (!(in >> n) || n < 0) malformed(path, "bad $Elements count");
      std::getline(in, line);
      for (long i = 0; i < n; ++i) {
        if (!std::getline(in, line)) malformed(path, "truncated $Elements");
        std::istringstream row(line);
        long id = 0;
        int type = 0, ntags = 0;
        if (!(row >> id >> type >> ntags) || ntags < 0) malformed(path, "bad element " + std::to_string(i));
        std::vector<int> tags(static_cast<std::size_t>(ntags));
        for (auto& t : tags) {
          if (!(row >> t)) malformed(path, "bad tags on element " + std::to_string(id));
        }
        if (type != 2) continue;
        if (tags.empty() || tags[0] <= 0) {
          malformed(path, "triangle " + std::to_string(id) + " has no physical subdomain tag");
        }
        Triangle t{};
        for (int k = 0; k < 3; ++k) {
          long node = 0;
          if (!(row >> node)) malformed(path, "truncated triangle " + std::to_string(id));
          auto it = node_index.find(node);
          if (it == node_index.end()) {
            malformed(path, "triangle " + std::to_string(id) + " references missing vertex " +
                                std::to_string(node));
          }
          t[k] = it->second;
        }
        soup.groups[tags[0]].push_back(t);
      }
      saw_elements = true;
    }
  }
  if (!saw_format) malformed(path, "missing $MeshFormat");
  if (!saw_elements) malformed(path, "missing $Elements");
  return soup;
}

}  // namespace

MeshFormat mesh_format_from_string(const std::string& name) {
  if (name == "gmsh-msh-v2-ascii" || name == "gmsh" || name == "msh") return MeshFormat::GmshV2Ascii;
  if (name == "off") return MeshFormat::Off;
  throw MeshError(MeshError::Kind::InvalidArgument, "unknown mesh format '" + name + "'");
}

MultiMesh import_mesh(const std::filesystem::path& path, MeshFormat format) {
  if (!std::filesystem::exists(path)) {
    throw MeshError(MeshError::Kind::MalformedFile, path.string() + ": file does not exist");
  }
  return assemble(format == MeshFormat::Off ? read_off(path) : read_gmsh_v2(path));
}

void export_mesh(const MultiMesh& mm, const std::filesystem::path& off_path) {
  std::ofstream out(off_path);
  if (!out) throw Error("cannot write " + off_path.string());
  int nv = 0, nf = 0;
  for (const auto& m : mm.meshes) {
    nv += m.num_vertices();
    nf += m.num_triangles();
  }
  out.precision(17);
  out << "OFF\n" << nv << ' ' << nf << " 0\n";
  for (const auto& m : mm.meshes) {
    for (const auto& v : m.vertices()) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  std::vector<int> subdomain;
  subdomain.reserve(static_cast<std::size_t>(nf));
  int offset = 0;
  for (int k = 0; k < mm.size(); ++k) {
    for (const auto& t : mm.meshes[k].triangles()) {
      out << "3 " << t[0] + offset << ' ' << t[1] + offset << ' ' << t[2] + offset << '\n';
      subdomain.push_back(k + 1);
    }
    offset += mm.meshes[k].num_vertices();
  }
  std::ofstream side(off_path.string() + ".json");
  if (!side) throw Error("cannot write " + off_path.string() + ".json");
  side << nlohmann::json{{"schema", "mtbem.mesh-subdomains/1"}, {"subdomain", subdomain}}.dump(1) << '\n';
}

}  // namespace mtbem
