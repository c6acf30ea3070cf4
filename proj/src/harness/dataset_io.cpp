#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "vmr/dataset.hpp"
#include "vmr/encoder.hpp"
#include "vmr/tensor_io.hpp"

namespace vmr::harness {

namespace fs = std::filesystem;

namespace {

constexpr const char* kHeader =
    "subject_id,timestep,view,image_path,age_years,delta_t_years,present,event_year,followup_years,dense_area";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string image_path(const Subject& s, std::size_t t, encoder::View v) {
  return "images/" + s.id + "_t" + std::to_string(t) + "_" + std::string(encoder::to_string(v)) + ".vmrt";
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("manifest line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

int parse_int(const std::string& s, std::size_t line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error("manifest line " + std::to_string(line) + ": bad integer '" + s + "'");
  return v;
}

}  // namespace

std::string manifest_csv(const Dataset& data) {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& s : data.subjects)
    for (std::size_t t = 0; t < s.exams.size(); ++t) {
      const auto& e = s.exams[t];
      for (auto v : encoder::kViews) {
        out += s.id + ',' + std::to_string(t) + ',' + std::string(encoder::to_string(v)) + ',';
        out += (e.present ? image_path(s, t, v) : "") + ',';
        out += num(e.age_years) + ',' + num(e.delta_t_years) + ',' + (e.present ? "1" : "0") + ',';
        out += (s.label.event_year ? std::to_string(*s.label.event_year) : "") + ',';
        out += std::to_string(s.label.followup_years) + ',' + num(s.dense_area) + '\n';
      }
    }
  return out;
}

void write_dataset(const Dataset& data, const fs::path& dir) {
  fs::create_directories(dir / "images");
  {
    std::ofstream out(dir / kManifestName, std::ios::binary);
    out << manifest_csv(data);
    if (!out) throw std::runtime_error("cannot write " + (dir / kManifestName).string());
  }
  for (const auto& s : data.subjects)
    for (std::size_t t = 0; t < s.exams.size(); ++t) {
      if (!s.exams[t].present) continue;
      for (std::size_t v = 0; v < 4; ++v)
        save_tensor(dir / image_path(s, t, encoder::kViews[v]), s.exams[t].views[v], DType::f32);
    }
}

Dataset read_dataset(const fs::path& dir) {
  std::ifstream in(dir / kManifestName);
  if (!in) throw std::runtime_error("cannot open " + (dir / kManifestName).string());
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw std::runtime_error("manifest: unexpected header");

  Dataset data;
  std::map<std::string, std::size_t> index;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 10) throw std::runtime_error("manifest line " + std::to_string(lineno) + ": expected 10 fields");
    auto [it, inserted] = index.try_emplace(f[0], data.subjects.size());
    if (inserted) {
      Subject s;
      s.id = f[0];
      if (!f[7].empty()) s.label.event_year = parse_int(f[7], lineno);
      s.label.followup_years = parse_int(f[8], lineno);
      s.label.validate();
      s.dense_area = parse_double(f[9], lineno);
      data.subjects.push_back(std::move(s));
    }
    Subject& s = data.subjects[it->second];
    const auto t = static_cast<std::size_t>(parse_int(f[1], lineno));
    if (t >= hazard::kYears) throw std::runtime_error("manifest line " + std::to_string(lineno) + ": bad timestep");
    if (s.exams.size() <= t) s.exams.resize(t + 1);
    Exam& e = s.exams[t];
    e.age_years = parse_double(f[4], lineno);
    e.delta_t_years = parse_double(f[5], lineno);
    e.present = f[6] == "1";
    if (e.present) {
      const auto v = static_cast<std::size_t>(encoder::view_from_string(f[2]));
      Tensor img = load_tensor(dir / f[3]);
      if (img.rank() != 3 || img.dim(0) != 1 || img.dim(1) != img.dim(2))
        throw std::runtime_error("image " + f[3] + " has shape " + shape_str(img.shape()));
      if (data.image_size == 0) data.image_size = img.dim(1);
      if (img.dim(1) != data.image_size) throw std::runtime_error("image " + f[3] + " has an inconsistent size");
      e.views[v] = std::move(img);
    }
  }
  for (const auto& s : data.subjects) {
    if (s.exams.size() != hazard::kYears) throw std::runtime_error("subject " + s.id + ": expected 5 timesteps");
    for (const auto& e : s.exams)
      if (e.present)
        for (const auto& v : e.views)
          if (!v.defined()) throw std::runtime_error("subject " + s.id + ": present exam lacks a view");
  }
  return data;
}

}  // namespace vmr::harness
