#include "nepr/circuits.hpp"

#include <stdexcept>

namespace nepr {

std::string GateBuilder::input(const std::string& name) {
  g_.inputs.push_back(name);
  return name;
}

std::string GateBuilder::gate(const std::string& type, std::vector<std::string> ins, std::string out) {
  if (out.empty()) out = "n" + std::to_string(counter_++);
  std::string inst = "g" + std::to_string(g_.gates.size());
  g_.gates.push_back({type, inst, std::move(ins), {out}, module_});
  return out;
}

void GateBuilder::output(const std::string& signal, const std::string& name) {
  for (auto& gate : g_.gates) {
    for (auto& s : gate.inputs)
      if (s == signal) s = name;
    for (auto& s : gate.outputs)
      if (s == signal) s = name;
  }
  g_.outputs.push_back(name);
}

std::pair<std::string, std::string> GateBuilder::half_adder(const std::string& a, const std::string& b) {
  return {gate("XOR2", {a, b}), gate("AND2", {a, b})};
}

std::pair<std::string, std::string> GateBuilder::full_adder(const std::string& a, const std::string& b, const std::string& c) {
  auto p = gate("XOR2", {a, b});
  auto s = gate("XOR2", {p, c});
  auto g = gate("AND2", {a, b});
  auto t = gate("AND2", {p, c});
  return {s, gate("OR2", {g, t})};
}

std::vector<std::string> GateBuilder::add(const std::vector<std::string>& a, const std::vector<std::string>& b,
                                          const std::string& cin) {
  std::vector<std::string> out;
  std::string carry = cin;
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> bits;
    if (i < a.size()) bits.push_back(a[i]);
    if (i < b.size()) bits.push_back(b[i]);
    if (!carry.empty()) bits.push_back(carry);
    if (bits.size() == 3) {
      std::tie(bits[0], carry) = full_adder(bits[0], bits[1], bits[2]);
    } else if (bits.size() == 2) {
      std::tie(bits[0], carry) = half_adder(bits[0], bits[1]);
    } else {
      carry.clear();
    }
    out.push_back(bits[0]);
  }
  if (!carry.empty()) out.push_back(carry);
  return out;
}

std::vector<std::string> GateBuilder::multiply(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  auto row = [&](const std::string& bi) {
    std::vector<std::string> r;
    for (const auto& aj : a) r.push_back(gate("AND2", {aj, bi}));
    return r;
  };
  std::vector<std::string> result;
  std::vector<std::string> acc = row(b[0]);
  for (std::size_t i = 1; i < b.size(); ++i) {
    result.push_back(acc.front());
    std::vector<std::string> high(acc.begin() + 1, acc.end());
    acc = add(high, row(b[i]));
  }
  result.insert(result.end(), acc.begin(), acc.end());
  return result;
}

// ---------------------------------------------------------------------------

GateNetlist full_adder_gates() {
  GateBuilder b("full_adder");
  auto a = b.input("A");
  auto bb = b.input("B");
  auto cin = b.input("Cin");
  auto [s, cout] = b.full_adder(a, bb, cin);
  b.output(s, "S");
  b.output(cout, "Cout");
  return b.take();
}

GateNetlist perceptron_gates() {
  constexpr int kInputs = 4;
  constexpr int kBits = 4;
  constexpr int kThreshold = 10;
  GateBuilder b("perceptron");
  std::vector<std::string> x;
  for (int i = 0; i < kInputs * kBits; ++i) x.push_back(b.input("x" + std::to_string(i)));
  auto w_in = b.input("w_in");
  auto clk = b.input("clk");

  // Weight and threshold shift register.
  std::vector<std::string> chain;
  std::string prev = w_in;
  for (int i = 0; i < kInputs * kBits + kThreshold; ++i) {
    prev = b.dff(prev, clk);
    chain.push_back(prev);
  }

  std::vector<std::vector<std::string>> products;
  for (int k = 0; k < kInputs; ++k) {
    std::vector<std::string> xi, wi;
    for (int j = 0; j < kBits; ++j) {
      xi.push_back(b.dff(x[k * kBits + j], clk));
      wi.push_back(chain[k * kBits + j]);
    }
    products.push_back(b.multiply(xi, wi));
  }
  auto reg = [&](const std::vector<std::string>& v) {
    std::vector<std::string> q;
    for (const auto& s : v) q.push_back(b.dff(s, clk));
    return q;
  };
  auto s01 = reg(b.add(products[0], products[1]));
  auto s23 = reg(b.add(products[2], products[3]));
  auto sum = reg(b.add(s01, s23));

  // sum >= threshold  <=>  carry out of sum + ~thr + 1.
  std::vector<std::string> nthr;
  for (int j = 0; j < kThreshold; ++j) nthr.push_back(b.gate("INV", {chain[kInputs * kBits + j]}));
  auto cmp = b.add(sum, nthr, "VDD");
  auto y = b.dff(cmp.back(), clk);
  b.output(y, "y");
  return b.take();
}

GateNetlist two_module_gates() {
  GateBuilder b("two_module");
  auto word = [&](const std::string& p) {
    std::vector<std::string> v;
    for (int i = 0; i < 4; ++i) v.push_back(b.input(p + std::to_string(i)));
    return v;
  };
  auto a = word("a");
  auto bw = word("b");
  auto c = word("c");
  auto d = word("d");
  auto e = word("e");
  auto clk = b.input("clk");

  b.set_module("A");
  auto sum = b.add(b.multiply(a, bw), b.multiply(c, d));

  b.set_module("B");
  std::vector<std::string> low(sum.begin(), sum.begin() + 4);
  auto prod = b.multiply(low, e);
  std::vector<std::string> q;
  for (const auto& s : prod) q.push_back(b.dff(s, clk));

  for (std::size_t i = 4; i < sum.size(); ++i) b.output(sum[i], "s" + std::to_string(i));
  for (std::size_t i = 0; i < q.size(); ++i) b.output(q[i], "q" + std::to_string(i));
  return b.take();
}

std::vector<std::string> builtin_circuit_names() { return {"full_adder", "perceptron", "two_module"}; }

GateNetlist builtin_circuit(const std::string& name) {
  if (name == "full_adder") return full_adder_gates();
  if (name == "perceptron") return perceptron_gates();
  if (name == "two_module") return two_module_gates();
  throw std::invalid_argument("unknown builtin circuit '" + name + "'");
}

}  // namespace nepr
