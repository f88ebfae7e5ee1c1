#include "easlab/eval/methods.hpp"

#include "easlab/error.hpp"

namespace easlab::eval {

std::vector<std::string> known_methods() { return {"noisy", "mmse", "ddae", "fcn"}; }

Method make_method(const std::string& name, const MethodResources& res) {
  if (name == "noisy") {
    return {name, [](const dsp::SampleBuffer& y) { return y; }};
  }
  if (name == "mmse") {
    res.mmse.validate();
    return {name, [cfg = res.mmse](const dsp::SampleBuffer& y) { return mmse::enhance_mmse(y, cfg); }};
  }
  if (name == "fcn") {
    if (!res.fcn) throw InvalidArgument("method fcn needs a trained FCN model");
    return {name, [model = res.fcn](const dsp::SampleBuffer& y) { return nn::fcn_forward(*model, y); }};
  }
  if (name == "ddae") {
    if (!res.ddae) throw InvalidArgument("method ddae needs a trained DDAE model");
    return {name, [model = res.ddae](const dsp::SampleBuffer& y) { return nn::ddae_enhance(*model, y); }};
  }
  throw InvalidArgument("unknown method '" + name + "'");
}

}  // namespace easlab::eval
