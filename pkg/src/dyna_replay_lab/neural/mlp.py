from typing import List, Optional, Tuple

import numpy as np

from dyna_replay_lab.core.exceptions import ShapeMismatchException


HIDDEN_WIDTHS: Tuple[int, int] = (20, 20)


class Mlp:
    """
    Fully connected network input -> 20 -> 20 -> output with rectifier hidden
    units and an identity output layer.

    Parameters are held as [W1, b1, W2, b2, W3, b3] with W of shape
    (fan_in, fan_out), so a batch of row vectors maps as ``x @ W + b``.
    """

    def __init__(self, input_size: int, output_size: int, parameters: Optional[List[np.ndarray]] = None):
        """
        :param input_size:
        :type input_size: int
        :param output_size:
        :type output_size: int
        :param parameters: initial parameters; zeros when omitted
        :type parameters: Optional[List[np.ndarray]]
        """
        super().__init__()
        self.input_size: int = input_size
        self.output_size: int = output_size
        if parameters is None:
            parameters = []
            for fan_in, fan_out in self.layer_shapes:
                parameters += [np.zeros((fan_in, fan_out)), np.zeros(fan_out)]
        self.parameters: List[np.ndarray] = [np.array(p, dtype=float) for p in parameters]
        self._check_parameters()

    @classmethod
    def initialise(
            cls,
            input_size: int,
            output_size: int,
            rng: np.random.Generator,
            zero_output: bool = False,
    ) -> "Mlp":
        """
        Weights uniform in +-1/sqrt(fan_in), biases zero.

        :param zero_output: zero the output layer so every output starts at 0
        :type zero_output: bool
        """
        net = cls(input_size, output_size)
        for layer, (fan_in, fan_out) in enumerate(net.layer_shapes):
            bound: float = 1.0 / np.sqrt(fan_in)
            net.parameters[2 * layer] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        if zero_output:
            net.parameters[-2][...] = 0.0
        return net

    @property
    def widths(self) -> Tuple[int, ...]:
        return (self.input_size,) + HIDDEN_WIDTHS + (self.output_size,)

    @property
    def layer_shapes(self) -> List[Tuple[int, int]]:
        widths = self.widths
        return list(zip(widths[:-1], widths[1:]))

    def _check_parameters(self) -> None:
        if len(self.parameters) != 2 * len(self.layer_shapes):
            raise ShapeMismatchException(
                f"Expected {2 * len(self.layer_shapes)} parameter arrays ; got {len(self.parameters)}"
            )
        for layer, (fan_in, fan_out) in enumerate(self.layer_shapes):
            weights, bias = self.parameters[2 * layer], self.parameters[2 * layer + 1]
            if weights.shape != (fan_in, fan_out) or bias.shape != (fan_out,):
                raise ShapeMismatchException(
                    f"Layer {layer} expects W {(fan_in, fan_out)} and b {(fan_out,)} ; "
                    f"got {weights.shape} and {bias.shape}"
                )

    def copy(self) -> "Mlp":
        return Mlp(self.input_size, self.output_size, [p.copy() for p in self.parameters])

    def load_from(self, other: "Mlp") -> None:
        """
        Copies ``other``'s parameters into this network in place.
        """
        for mine, theirs in zip(self.parameters, other.parameters):
            mine[...] = theirs

    def _as_batch(self, inputs: np.ndarray) -> np.ndarray:
        batch = np.asarray(inputs, dtype=float)
        if batch.ndim == 1:
            batch = batch[None, :]
        if batch.ndim != 2 or batch.shape[1] != self.input_size:
            raise ShapeMismatchException(
                f"Expected input of width {self.input_size} ; got shape {np.shape(inputs)}"
            )
        return batch

    def forward_cache(self, inputs: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        """
        Forward pass keeping every layer's input and pre-activation.

        :return: (layer inputs, pre-activations); the last pre-activation is
            the network output
        """
        activation: np.ndarray = self._as_batch(inputs)
        layer_inputs: List[np.ndarray] = []
        pre_activations: List[np.ndarray] = []
        last: int = len(self.layer_shapes) - 1
        for layer in range(len(self.layer_shapes)):
            layer_inputs.append(activation)
            z = activation @ self.parameters[2 * layer] + self.parameters[2 * layer + 1]
            pre_activations.append(z)
            activation = z if layer == last else np.maximum(z, 0.0)
        return layer_inputs, pre_activations

    def forward(self, inputs: np.ndarray) -> np.ndarray:
        """
        :param inputs: one input vector or a batch of row vectors
        :type inputs: np.ndarray
        :raises ShapeMismatchException:
        :return: output vector, or one output row per input row
        :rtype: np.ndarray
        """
        _, pre_activations = self.forward_cache(inputs)
        output = pre_activations[-1]
        return output[0] if np.ndim(inputs) == 1 else output

    def gradients(self, inputs: np.ndarray, cotangent: np.ndarray) -> List[np.ndarray]:
        """
        Reverse-mode gradient of <cotangent, forward(inputs)> with respect to
        every parameter, summed over the batch.

        :param inputs: one input vector or a batch of row vectors
        :type inputs: np.ndarray
        :param cotangent: output cotangent, same shape as the output
        :type cotangent: np.ndarray
        :raises ShapeMismatchException:
        :return: gradients in parameter order
        :rtype: List[np.ndarray]
        """
        layer_inputs, pre_activations = self.forward_cache(inputs)
        delta = np.asarray(cotangent, dtype=float)
        if delta.ndim == 1:
            delta = delta[None, :]
        if delta.shape != pre_activations[-1].shape:
            raise ShapeMismatchException(
                f"Cotangent shape {np.shape(cotangent)} does not match output shape "
                f"{pre_activations[-1].shape}"
            )
        grads: List[np.ndarray] = [np.zeros_like(p) for p in self.parameters]
        for layer in reversed(range(len(self.layer_shapes))):
            grads[2 * layer] = layer_inputs[layer].T @ delta
            grads[2 * layer + 1] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.parameters[2 * layer].T) * (pre_activations[layer - 1] > 0.0)
        return grads


def forward(net: Mlp, inputs: np.ndarray) -> np.ndarray:
    return net.forward(inputs)


def gradients(net: Mlp, inputs: np.ndarray, cotangent: np.ndarray) -> List[np.ndarray]:
    return net.gradients(inputs, cotangent)
