#pragma once

#include <string>

#include "actionlm/io.hpp"

namespace actionlm::viz {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

// Minimal SVG 1.1 document builder with fixed numeric formatting, so a given
// scene always renders to identical bytes.
class SvgBuilder {
 public:
  SvgBuilder(double width, double height) : width_(width), height_(height) {}

  static std::string num(double v) {
    std::string s = fmt_double(v, 2);
    if (s == "-0.00") s = "0.00";
    return s;
  }

  void raw(const std::string& s) { body_ += s; }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double stroke_width = 1.0,
            const std::string& extra = "") {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
             "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(stroke_width) + "\"" + extra + "/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& stroke, const std::string& fill = "none",
            double stroke_width = 1.0) {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
             "\" stroke=\"" + stroke + "\" fill=\"" + fill + "\" stroke-width=\"" + num(stroke_width) + "\"/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& stroke, const std::string& fill = "none",
              double stroke_width = 1.0) {
    body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" stroke=\"" + stroke +
             "\" fill=\"" + fill + "\" stroke-width=\"" + num(stroke_width) + "\"/>\n";
  }

  void text(double x, double y, const std::string& content, double size, const std::string& fill = "#000000",
            const std::string& anchor = "middle", const std::string& extra = "") {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
             "\" font-family=\"sans-serif\" fill=\"" + fill + "\" text-anchor=\"" + anchor + "\"" + extra + ">" +
             xml_escape(content) + "</text>\n";
  }

  void polyline(const std::string& points, const std::string& stroke, double stroke_width = 1.5) {
    body_ += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
             num(stroke_width) + "\"/>\n";
  }

  void group_open(double tx, double ty) {
    body_ += "<g transform=\"translate(" + num(tx) + "," + num(ty) + ")\">\n";
  }
  void group_close() { body_ += "</g>\n"; }

  std::string finish() const {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) +
           "\">\n" + body_ + "</svg>\n";
  }

 private:
  double width_, height_;
  std::string body_;
};

}  // namespace actionlm::viz
