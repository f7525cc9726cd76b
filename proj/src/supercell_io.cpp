#include <json.hpp>

#include <fstream>
#include <sstream>

#include "cargo/lattice.hpp"

namespace cargo {

namespace {

using nlohmann::json;

double number_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ParseError(where + ": missing numeric field '" + key + "'");
  }
  return j.at(key).get<double>();
}

std::array<double, 3> triple(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ParseError(where + ": expected an array of 3 numbers");
  std::array<double, 3> out{};
  for (std::size_t k = 0; k < 3; ++k) {
    if (!j[k].is_number()) throw ParseError(where + ": expected an array of 3 numbers");
    out[k] = j[k].get<double>();
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Supercell read_supercell_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open supercell file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  const std::string where = path.string();
  if (!doc.is_object() || !doc.contains("box") || !doc.contains("atoms")) {
    throw ParseError(where + ": expected an object with 'box' and 'atoms'");
  }
  const auto box = triple(doc.at("box"), where + ": box");
  const auto& atoms_json = doc.at("atoms");
  if (!atoms_json.is_array()) throw ParseError(where + ": 'atoms' must be an array");
  std::vector<Atom> atoms;
  atoms.reserve(atoms_json.size());
  for (std::size_t k = 0; k < atoms_json.size(); ++k) {
    const auto& a = atoms_json[k];
    const std::string at = where + ": atoms[" + std::to_string(k) + "]";
    if (!a.is_object()) throw ParseError(at + ": expected an object");
    Atom atom;
    if (!a.contains("id") || !a.at("id").is_number_integer()) throw ParseError(at + ": missing integer 'id'");
    atom.id = a.at("id").get<int>();
    if (!a.contains("type") || !a.at("type").is_string()) throw ParseError(at + ": missing string 'type'");
    atom.type = a.at("type").get<std::string>();
    if (!a.contains("pos")) throw ParseError(at + ": missing 'pos'");
    atom.pos = triple(a.at("pos"), at + ": pos");
    if (a.contains("moment") && !a.at("moment").is_null()) atom.moment = number_field(a, "moment", at);
    atoms.push_back(std::move(atom));
  }
  return Supercell(box, std::move(atoms));
}

Supercell read_supercell_csv(const std::filesystem::path& path, std::array<double, 3> box) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open supercell file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  const std::vector<std::string> expected{"id", "type", "x", "y", "z", "moment"};
  bool header_seen = false;
  std::vector<Atom> atoms;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    const std::string at = path.string() + ":" + std::to_string(line_no);
    if (!header_seen) {
      if (cells != expected) throw ParseError(at + ": expected header 'id,type,x,y,z,moment'");
      header_seen = true;
      continue;
    }
    if (cells.size() != 6) throw ParseError(at + ": expected 6 columns, got " + std::to_string(cells.size()));
    Atom atom;
    try {
      std::size_t used = 0;
      atom.id = std::stoi(cells[0], &used);
      if (used != cells[0].size()) throw std::invalid_argument("id");
      atom.type = cells[1];
      for (int ax = 0; ax < 3; ++ax) {
        atom.pos[ax] = std::stod(cells[2 + ax], &used);
        if (used != cells[2 + ax].size()) throw std::invalid_argument("coordinate");
      }
      if (!cells[5].empty()) {
        atom.moment = std::stod(cells[5], &used);
        if (used != cells[5].size()) throw std::invalid_argument("moment");
      }
    } catch (const std::exception&) {
      throw ParseError(at + ": malformed row '" + line + "'");
    }
    atoms.push_back(std::move(atom));
  }
  if (!header_seen) throw ParseError(path.string() + ": empty supercell file");
  return Supercell(box, std::move(atoms));
}

Supercell read_supercell(const std::filesystem::path& path, std::optional<std::array<double, 3>> box) {
  if (path.extension() == ".json") {
    if (box) throw InvalidArgument("JSON supercell files carry their own box; drop --box");
    return read_supercell_json(path);
  }
  if (!box) throw InvalidArgument("CSV supercell files need box lengths (--box Lx,Ly,Lz)");
  return read_supercell_csv(path, *box);
}

}  // namespace cargo
