#include "archgen/synth.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <unordered_set>

#include "archgen/dedup.hpp"
#include "archgen/random.hpp"

namespace archgen::synth {

namespace {

const char* const kActivations[] = {"nn.ReLU(inplace=True)", "nn.GELU()", "nn.SiLU()",
                                    "nn.LeakyReLU(0.1, inplace=True)", "nn.ELU()"};
const int kKernels[] = {1, 3, 3, 5, 7};
const int kWidths[] = {16, 24, 32, 48, 64, 96, 128, 160, 192, 256, 320, 384, 440, 512};

template <typename T, std::size_t N>
const T& pick(std::mt19937_64& rng, const T (&items)[N]) {
  return items[uniform_below(rng, N)];
}

int between(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

const char* kTrainingMethods = R"(
    def train_setup(self, device, prm=None):
        prm = prm or {}
        self.to(device)
        self.criteria = (nn.CrossEntropyLoss().to(device),)
        self.optimizer = torch.optim.SGD(
            self.parameters(), lr=prm.get('lr', 0.01), momentum=prm.get('momentum', 0.9)
        )

    def learn(self, data, target, device):
        self.train()
        data, target = data.to(device), target.to(device)
        self.optimizer.zero_grad()
        loss = self.criteria[0](self(data), target)
        loss.backward()
        nn.utils.clip_grad_norm_(self.parameters(), 3)
        self.optimizer.step()
        return loss.item()
)";

}  // namespace

std::string minimal_net() {
  return R"(import torch
import torch.nn as nn


def supported_hyperparameters():
    return {'lr', 'momentum'}


class Net(nn.Module):
    def __init__(self, in_shape=(1, 3, 32, 32), out_shape=(10,), prm=None, device='cpu'):
        super().__init__()
        self.fc = nn.Linear(in_shape[1] * in_shape[2] * in_shape[3], out_shape[0])

    def forward(self, x):
        return self.fc(torch.flatten(x, 1))
)" + std::string(kTrainingMethods);
}

std::string architecture(std::uint64_t seed, std::size_t target_bytes) {
  std::mt19937_64 rng(mix_seed(seed));
  std::ostringstream os;
  const char* act = pick(rng, kActivations);
  const bool residual = uniform_below(rng, 2) == 1;
  const bool squeeze = uniform_below(rng, 3) == 0;

  os << "import torch\nimport torch.nn as nn\nimport torch.nn.functional as F\n\n\n";
  os << "def supported_hyperparameters():\n    return {'lr', 'momentum'}\n\n\n";

  os << "class ConvBlock(nn.Module):\n"
        "    def __init__(self, in_ch, out_ch, kernel_size=3, stride=1):\n"
        "        super().__init__()\n"
        "        self.conv = nn.Conv2d(in_ch, out_ch, kernel_size, stride=stride, padding=kernel_size // 2, bias=False)\n"
        "        self.bn = nn.BatchNorm2d(out_ch)\n"
        "        self.act = " << act << "\n\n"
        "    def forward(self, x):\n"
        "        return self.act(self.bn(self.conv(x)))\n\n\n";

  if (residual) {
    os << "class ResidualUnit(nn.Module):\n"
          "    def __init__(self, channels, stride=1):\n"
          "        super().__init__()\n"
          "        self.body = nn.Sequential(\n"
          "            ConvBlock(channels, channels, 3, stride),\n"
          "            nn.Conv2d(channels, channels, 3, padding=1, bias=False),\n"
          "            nn.BatchNorm2d(channels),\n"
          "        )\n"
          "        self.downsample = None\n"
          "        if stride != 1:\n"
          "            self.downsample = nn.Sequential(\n"
          "                nn.Conv2d(channels, channels, 1, stride=stride, bias=False),\n"
          "                nn.BatchNorm2d(channels),\n"
          "            )\n\n"
          "    def forward(self, x):\n"
          "        identity = x if self.downsample is None else self.downsample(x)\n"
          "        return F.relu(self.body(x) + identity)\n\n\n";
  }
  if (squeeze) {
    const int reduction = 4 << uniform_below(rng, 3);
    os << "class SqueezeExcite(nn.Module):\n"
          "    def __init__(self, channels, reduction=" << reduction << "):\n"
          "        super().__init__()\n"
          "        hidden = max(channels // reduction, 4)\n"
          "        self.fc1 = nn.Linear(channels, hidden)\n"
          "        self.fc2 = nn.Linear(hidden, channels)\n\n"
          "    def forward(self, x):\n"
          "        w = F.adaptive_avg_pool2d(x, 1).flatten(1)\n"
          "        w = torch.sigmoid(self.fc2(F.relu(self.fc1(w))))\n"
          "        return x * w[:, :, None, None]\n\n\n";
  }

  // Fixed overhead is about 2KB; each feature stage adds roughly 120 bytes.
  const std::size_t stages = std::max<std::size_t>(2, target_bytes > 2000 ? (target_bytes - 2000) / 120 : 2);
  const std::size_t jitter = uniform_below(rng, 3);
  std::vector<int> widths;
  for (std::size_t i = 0; i < stages + jitter; ++i) widths.push_back(pick(rng, kWidths));

  os << "class Net(nn.Module):\n"
        "    def __init__(self, in_shape=(1, 3, 32, 32), out_shape=(10,), prm=None, device='cpu'):\n"
        "        super().__init__()\n"
        "        self.device = device\n"
        "        channels = in_shape[1]\n"
        "        self.features = nn.Sequential(\n";
  int in = 0;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const int k = pick(rng, kKernels);
    const int stride = (i % 2 == 1) ? 2 : 1;
    os << "            ConvBlock(" << (i == 0 ? std::string("channels") : std::to_string(in)) << ", " << widths[i]
       << ", " << k << ", " << stride << "),\n";
    if (residual && uniform_below(rng, 2) == 0) os << "            ResidualUnit(" << widths[i] << "),\n";
    if (squeeze && uniform_below(rng, 3) == 0) os << "            SqueezeExcite(" << widths[i] << "),\n";
    if (uniform_below(rng, 4) == 0) os << "            nn.Dropout2d(p=0." << between(rng, 1, 4) << "),\n";
    in = widths[i];
  }
  const int hidden = pick(rng, kWidths) * 2;
  os << "        )\n"
        "        self.pool = nn.AdaptiveAvgPool2d((1, 1))\n"
        "        self.classifier = nn.Sequential(\n"
        "            nn.Dropout(p=0." << between(rng, 1, 5) << "),\n"
        "            nn.Linear(" << in << ", " << hidden << "),\n"
        "            " << act << ",\n"
        "            nn.Linear(" << hidden << ", out_shape[0]),\n"
        "        )\n\n"
        "    def forward(self, x):\n"
        "        x = self.features(x)\n"
        "        x = self.pool(x)\n"
        "        x = torch.flatten(x, 1)\n"
        "        return self.classifier(x)\n"
     << kTrainingMethods;
  return os.str();
}

std::vector<std::string> corpus(std::size_t count, std::uint64_t seed, std::size_t target_bytes) {
  std::vector<std::string> out;
  out.reserve(count);
  std::unordered_set<std::string> seen;
  for (std::uint64_t i = 0; out.size() < count; ++i) {
    std::string code = architecture(mix_seed(seed, i), target_bytes);
    if (seen.insert(dedup::normalize(code)).second) out.push_back(std::move(code));
  }
  return out;
}

std::string mutate_whitespace(std::string_view code, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed));
  // Split into lines, remembering leading indentation in 4-space units.
  std::vector<std::string> lines;
  {
    std::size_t pos = 0;
    while (pos <= code.size()) {
      const std::size_t nl = code.find('\n', pos);
      lines.emplace_back(code.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
  }
  const std::string units[] = {"  ", "\t", "        ", "   "};
  const std::string& unit = units[uniform_below(rng, 4)];
  const bool crlf = uniform_below(rng, 3) == 0;
  const bool spacing = uniform_below(rng, 2) == 0;

  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    std::size_t lead = 0;
    while (lead < line.size() && line[lead] == ' ') ++lead;
    if (lead % 4 == 0 && lead < line.size()) {
      std::string indent;
      for (std::size_t k = 0; k < lead / 4; ++k) indent += unit;
      line = indent + line.substr(lead);
    }
    if (spacing) {
      // ", " -> ",  " and " = " -> "=" (outside the indentation)
      std::string spaced;
      for (std::size_t k = 0; k < line.size(); ++k) {
        if (line.compare(k, 3, " = ") == 0 && k > 0) {
          spaced += '=';
          k += 2;
          continue;
        }
        spaced += line[k];
        if (line[k] == ',' && k + 1 < line.size() && line[k + 1] == ' ') spaced += ' ';
      }
      line = std::move(spaced);
    }
    if (!line.empty() && uniform_below(rng, 5) == 0) line.append(uniform_below(rng, 2) ? "  " : "\t");
    out += line;
    if (i + 1 < lines.size()) {
      out += crlf ? "\r\n" : "\n";
      if (uniform_below(rng, 12) == 0) out += crlf ? "\r\n" : "\n";
    }
  }
  if (out == code) out += "\n";
  return out;
}

std::string completion(std::uint64_t seed, std::size_t target_bytes) {
  return "Here is the improved model, combining the strongest elements of the examples:\n\n```python\n" +
         architecture(seed, target_bytes) + "```\n\nThe design keeps the required interface.\n";
}

}  // namespace archgen::synth
