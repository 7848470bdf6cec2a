#include "pmpo/policy_io.hpp"

#include "pmpo/errors.hpp"
#include "pmpo/numeric.hpp"

#include <cstdlib>

namespace pmpo {

namespace {

using nlohmann::json;

json encode_params(const ParamVector& params) {
  json out = json::array();
  for (double v : params) out.push_back(format_double17(v));
  return out;
}

ParamVector decode_params(const json& arr) {
  if (!arr.is_array()) throw InputError("policy document: \"parameters\" must be an array");
  std::vector<double> values;
  values.reserve(arr.size());
  for (const auto& item : arr) {
    if (item.is_string()) {
      const auto& text = item.get_ref<const std::string&>();
      char* end = nullptr;
      const double v = std::strtod(text.c_str(), &end);
      if (end == text.c_str() || *end != '\0')
        throw InputError("policy document: unparseable parameter \"" + text + "\"");
      values.push_back(v);
    } else if (item.is_number()) {
      values.push_back(item.get<double>());
    } else {
      throw InputError("policy document: parameters must be decimal strings or numbers");
    }
  }
  return ParamVector(std::move(values));
}

std::size_t dim(const json& dims, const char* key) {
  if (!dims.contains(key) || !dims[key].is_number_unsigned())
    throw InputError(std::string("policy document: dimensions.") + key + " must be a nonnegative integer");
  return dims[key].get<std::size_t>();
}

}  // namespace

json policy_to_json(const AnyPolicy& policy) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        json doc;
        doc["family"] = std::string(P::kFamily);
        if constexpr (std::is_same_v<P, GaussianPolicy>) {
          doc["dimensions"] = {{"dimension", p.dimension()}};
        } else if constexpr (std::is_same_v<P, CategoricalPolicy>) {
          doc["dimensions"] = {{"conditions", p.conditions()}, {"outputs", p.outputs()}};
        } else {
          doc["dimensions"] = {{"conditions", p.conditions()},
                               {"vocab_size", p.vocab_size()},
                               {"context_order", p.context_order()},
                               {"max_length", p.max_length()}};
        }
        doc["parameters"] = encode_params(p.params());
        return doc;
      },
      policy);
}

AnyPolicy policy_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("family") || !doc["family"].is_string())
    throw InputError("policy document: missing \"family\"");
  if (!doc.contains("dimensions") || !doc["dimensions"].is_object())
    throw InputError("policy document: missing \"dimensions\"");
  if (!doc.contains("parameters")) throw InputError("policy document: missing \"parameters\"");
  const auto family = doc["family"].get<std::string>();
  const auto& dims = doc["dimensions"];
  const ParamVector params = decode_params(doc["parameters"]);

  if (family == GaussianPolicy::kFamily) {
    const std::size_t d = dim(dims, "dimension");
    if (params.size() != 2 * d) throw InputError("policy document: expected 2*dimension parameters");
    return GaussianPolicy(std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)).with_params(params);
  }
  if (family == CategoricalPolicy::kFamily) {
    return CategoricalPolicy(dim(dims, "conditions"), dim(dims, "outputs"), params.values());
  }
  if (family == AutoregressivePolicy::kFamily) {
    return AutoregressivePolicy(dim(dims, "conditions"), dim(dims, "vocab_size"),
                                dim(dims, "context_order"), dim(dims, "max_length"), params.values());
  }
  throw InputError("policy document: unknown family \"" + family + "\"");
}

std::string policy_to_string(const AnyPolicy& policy) { return policy_to_json(policy).dump(2); }

AnyPolicy policy_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("policy document: ") + e.what());
  }
  return policy_from_json(doc);
}

}  // namespace pmpo
