#pragma once

#include <string>
#include <vector>

namespace hoipc::svg {

/// Minimal line chart rendered to a standalone SVG document.
class LinePlot {
 public:
  LinePlot(std::string title, std::string xlabel, std::string ylabel);
  void add(std::string name, std::vector<double> x, std::vector<double> y, bool dashed = false);
  std::string render() const;

 private:
  struct Series {
    std::string name;
    std::vector<double> x, y;
    bool dashed;
  };
  std::string title_, xlabel_, ylabel_;
  std::vector<Series> series_;
};

/// Integer-binned histogram of non-negative values.
std::string histogram(const std::string& title, const std::string& xlabel, const std::vector<double>& values);

}  // namespace hoipc::svg
