#include "schema.hpp"

#include <algorithm>
#include <stdexcept>

namespace iwdg::cli::detail {

namespace {

using nlohmann::json;

std::string pointer_or_root(const std::string& path) { return path.empty() ? "/" : path; }

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

bool type_matches(const json& inst, const std::string& type) {
  if (type == "object") return inst.is_object();
  if (type == "array") return inst.is_array();
  if (type == "string") return inst.is_string();
  if (type == "integer") return inst.is_number_integer();
  if (type == "number") return inst.is_number();
  if (type == "boolean") return inst.is_boolean();
  if (type == "null") return inst.is_null();
  throw std::logic_error("schema uses unsupported type " + type);
}

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void check(const json& inst, const json& schema, const std::string& path, std::vector<std::string>& errs) const {
    if (schema.contains("$ref")) {
      check(inst, resolve(schema.at("$ref").get<std::string>()), path, errs);
      return;
    }
    if (schema.contains("oneOf")) {
      std::size_t matches = 0;
      std::vector<std::string> best;
      for (const json& alt : schema.at("oneOf")) {
        std::vector<std::string> e;
        check(inst, alt, path, e);
        if (e.empty()) ++matches;
        else if (best.empty() || e.size() < best.size()) best = e;
      }
      if (matches == 0) {
        errs.push_back(best.empty() ? pointer_or_root(path) + ": matches no alternative" : best.front());
        return;
      }
      if (matches > 1) errs.push_back(pointer_or_root(path) + ": matches more than one alternative");
    }
    if (schema.contains("enum")) {
      const json& options = schema.at("enum");
      if (std::find(options.begin(), options.end(), inst) == options.end()) {
        errs.push_back(pointer_or_root(path) + ": value " + inst.dump() + " is not one of " + options.dump());
        return;
      }
    }
    if (schema.contains("type")) {
      const std::string type = schema.at("type").get<std::string>();
      if (!type_matches(inst, type)) {
        errs.push_back(pointer_or_root(path) + ": expected " + type + ", got " + std::string(inst.type_name()));
        return;
      }
    }
    if (inst.is_number()) check_number(inst.get<double>(), schema, path, errs);
    if (inst.is_object()) check_object(inst, schema, path, errs);
    if (inst.is_array()) check_array(inst, schema, path, errs);
  }

 private:
  const json& resolve(const std::string& ref) const {
    const std::string prefix = "#/definitions/";
    if (ref.rfind(prefix, 0) != 0) throw std::logic_error("unsupported $ref " + ref);
    return root_.at("definitions").at(ref.substr(prefix.size()));
  }

  static void check_number(double v, const json& schema, const std::string& path, std::vector<std::string>& errs) {
    if (schema.contains("minimum") && v < schema.at("minimum").get<double>()) {
      errs.push_back(pointer_or_root(path) + ": must be >= " + schema.at("minimum").dump());
    }
    if (schema.contains("maximum") && v > schema.at("maximum").get<double>()) {
      errs.push_back(pointer_or_root(path) + ": must be <= " + schema.at("maximum").dump());
    }
    if (schema.contains("exclusiveMinimum") && v <= schema.at("exclusiveMinimum").get<double>()) {
      errs.push_back(pointer_or_root(path) + ": must be > " + schema.at("exclusiveMinimum").dump());
    }
  }

  void check_object(const json& inst, const json& schema, const std::string& path,
                    std::vector<std::string>& errs) const {
    if (schema.contains("required")) {
      for (const auto& key : schema.at("required")) {
        if (!inst.contains(key.get<std::string>())) {
          errs.push_back(pointer_or_root(path) + ": missing required property '" + key.get<std::string>() + "'");
        }
      }
    }
    const json props = schema.value("properties", json::object());
    const bool closed = schema.contains("additionalProperties") && !schema.at("additionalProperties").get<bool>();
    for (const auto& [key, value] : inst.items()) {
      const std::string child = path + "/" + escape_token(key);
      if (props.contains(key)) {
        check(value, props.at(key), child, errs);
      } else if (closed) {
        errs.push_back(child + ": unknown property");
      }
    }
  }

  void check_array(const json& inst, const json& schema, const std::string& path,
                   std::vector<std::string>& errs) const {
    if (schema.contains("minItems") && inst.size() < schema.at("minItems").get<std::size_t>()) {
      errs.push_back(pointer_or_root(path) + ": needs at least " + schema.at("minItems").dump() + " items");
    }
    if (schema.contains("maxItems") && inst.size() > schema.at("maxItems").get<std::size_t>()) {
      errs.push_back(pointer_or_root(path) + ": allows at most " + schema.at("maxItems").dump() + " items");
    }
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < inst.size(); ++i) {
        check(inst[i], schema.at("items"), path + "/" + std::to_string(i), errs);
      }
    }
  }

  const json& root_;
};

}  // namespace

std::vector<std::string> validate_schema(const nlohmann::json& instance, const nlohmann::json& schema) {
  std::vector<std::string> errs;
  Validator(schema).check(instance, schema, "", errs);
  return errs;
}

}  // namespace iwdg::cli::detail
