// vstub: compile -o OUT files... | run OUT | sim files...
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vstub.hpp"

namespace {

int usage() {
  std::fprintf(stderr,
               "usage: vstub compile -o OUT FILE...\n"
               "       vstub run OUT\n"
               "       vstub sim FILE...\n");
  return 64;
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

std::vector<vstub::Module> parse_all(const std::vector<vstub::SourceFile>& files) {
  std::vector<vstub::Module> modules;
  for (const auto& f : files) {
    auto ms = vstub::parse(f);
    for (auto& m : ms) modules.push_back(std::move(m));
  }
  return modules;
}

int elaborate(const std::vector<vstub::SourceFile>& files, bool run) {
  try {
    const auto modules = parse_all(files);
    return vstub::simulate(modules, vstub::SimOptions{!run});
  } catch (const vstub::Diag& d) {
    std::fprintf(stderr, "%s\n", d.what());
    return 1;
  }
}

bool load_sources(const std::vector<std::string>& paths, std::vector<vstub::SourceFile>& files) {
  for (const auto& p : paths) {
    vstub::SourceFile f;
    f.name = p;
    if (!read_file(p, f.text)) {
      std::fprintf(stderr, "vstub: cannot read %s\n", p.c_str());
      return false;
    }
    files.push_back(std::move(f));
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage();
  const std::string cmd = argv[1];

  if (cmd == "compile") {
    std::string out;
    std::vector<std::string> paths;
    for (int i = 2; i < argc; ++i) {
      if (std::strcmp(argv[i], "-o") == 0 && i + 1 < argc) {
        out = argv[++i];
      } else {
        paths.emplace_back(argv[i]);
      }
    }
    if (out.empty() || paths.empty()) return usage();
    std::vector<vstub::SourceFile> files;
    if (!load_sources(paths, files)) return 2;
    if (const int rc = elaborate(files, false); rc != 0) return rc;
    nlohmann::json bundle = {{"vstub", 1}, {"files", nlohmann::json::array()}};
    for (const auto& f : files) bundle["files"].push_back({{"name", f.name}, {"text", f.text}});
    std::ofstream o(out, std::ios::binary);
    o << bundle.dump();
    if (!o) {
      std::fprintf(stderr, "vstub: cannot write %s\n", out.c_str());
      return 2;
    }
    return 0;
  }

  if (cmd == "run") {
    if (argc != 3) return usage();
    std::string text;
    if (!read_file(argv[2], text)) {
      std::fprintf(stderr, "vstub: cannot read %s\n", argv[2]);
      return 2;
    }
    std::vector<vstub::SourceFile> files;
    try {
      const auto bundle = nlohmann::json::parse(text);
      if (bundle.value("vstub", 0) != 1) throw std::runtime_error("not a vstub bundle");
      for (const auto& f : bundle.at("files")) {
        files.push_back({f.at("name").get<std::string>(), f.at("text").get<std::string>()});
      }
    } catch (const std::exception& e) {
      std::fprintf(stderr, "vstub: %s: %s\n", argv[2], e.what());
      return 2;
    }
    return elaborate(files, true);
  }

  if (cmd == "sim") {
    std::vector<std::string> paths(argv + 2, argv + argc);
    if (paths.empty()) return usage();
    std::vector<vstub::SourceFile> files;
    if (!load_sources(paths, files)) return 2;
    return elaborate(files, true);
  }

  return usage();
}
