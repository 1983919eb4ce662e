#include "opca/tensor.hpp"

#include <algorithm>

#include "opca/errors.hpp"

namespace opca {

ImageBatch slice(const ImageBatch& images, std::size_t first, std::size_t count) {
  if (first + count > images.batch) reject("slice: range exceeds batch");
  ImageBatch out(count, images.channels, images.height, images.width);
  const auto begin = images.values.begin() + static_cast<std::ptrdiff_t>(first * images.sample_size());
  std::copy(begin, begin + static_cast<std::ptrdiff_t>(count * images.sample_size()), out.values.begin());
  return out;
}

ImageBatch gather(const ImageBatch& images, std::span<const std::size_t> indices) {
  ImageBatch out(indices.size(), images.channels, images.height, images.width);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= images.batch) reject("gather: index out of range");
    const auto src = images.sample(indices[i]);
    std::copy(src.begin(), src.end(), out.sample(i).begin());
  }
  return out;
}

}  // namespace opca
