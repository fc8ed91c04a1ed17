"""
Multilayer perceptron surrogates that classify or regress power from engineered features, with
initialization from larger pretrained networks by zero-padding unused inputs.
"""
import dataclasses
import logging
import numpy as np
from sklearn import preprocessing
import torch as th
from tqdm import tqdm
import typing
from .features import feature_names
from .special_math import RngStream
from .util import dump_json, hash_json, load_json


LOGGER = logging.getLogger(__name__)
HIDDEN_UNITS = (64, 32)
LEARNING_RATE_GRID = (1e-2, 3e-3, 1e-3, 3e-4)
ACTIVATIONS = {
    "relu": th.nn.ReLU,
    "sigmoid": th.nn.Sigmoid,
    "linear": th.nn.Identity,
}
LOSSES = {
    "bce": th.nn.BCELoss,
    "mse": th.nn.MSELoss,
}


class TrainingDivergedError(RuntimeError):
    """
    The training loss became NaN.
    """


class SchemaError(ValueError):
    """
    Features do not match the input schema of a network.
    """


class IncompatibleTransferError(ValueError):
    """
    A child schema has a block that is wider than the parent's.
    """


@dataclasses.dataclass(frozen=True)
class FeatureSchema:
    """
    Block widths of surrogate features: `k` coefficients, sample size, scaled weight, and `r`
    principal components.
    """
    num_predictors: int
    num_components: int

    def __post_init__(self):
        if self.num_predictors < 1 or self.num_components < 0:
            raise SchemaError(f"invalid schema with {self.num_predictors} predictors and "
                              f"{self.num_components} components")

    @property
    def width(self) -> int:
        return self.num_predictors + 2 + self.num_components

    @property
    def names(self) -> list[str]:
        return feature_names(self.num_predictors, self.num_components)

    @property
    def blocks(self) -> list[tuple[str, int]]:
        return [("beta", self.num_predictors), ("N", 1), ("scaled_weight", 1),
                ("pc", self.num_components)]

    def slots(self, parent: "FeatureSchema") -> np.ndarray:
        """
        Column of the parent schema each of this schema's features maps to.
        """
        if self.num_predictors > parent.num_predictors or \
                self.num_components > parent.num_components:
            raise IncompatibleTransferError(f"{self} does not fit into {parent}")
        k, r = self.num_predictors, self.num_components
        K = parent.num_predictors
        return np.concatenate([np.arange(k), [K, K + 1], K + 2 + np.arange(r)]).astype(int)

    def to_dict(self) -> dict:
        return {"blocks": [{"name": name, "width": width} for name, width in self.blocks]}

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureSchema":
        widths = {block["name"]: block["width"] for block in data["blocks"]}
        return cls(widths["beta"], widths["pc"])


@dataclasses.dataclass
class Layer:
    """
    Dense layer with weights of shape `(outputs, inputs)`.
    """
    weights: np.ndarray
    biases: np.ndarray
    activation: typing.Literal["relu", "sigmoid", "linear"]

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        assert self.weights.ndim == 2 and self.biases.shape == self.weights.shape[:1], \
            f"weights {self.weights.shape} do not match biases {self.biases.shape}"
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation}")

    def to_dict(self) -> dict:
        return {"weights": self.weights, "biases": self.biases, "activation": self.activation}

    @classmethod
    def from_dict(cls, data: dict) -> "Layer":
        return cls(data["weights"], data["biases"], data["activation"])


@dataclasses.dataclass
class NetworkCheckpoint:
    """
    Serializable surrogate network.

    Args:
        layers: Dense layers applied in order.
        input_schema: Schema of the network inputs (`None` for networks without feature blocks).
        feature_schema: Schema of the features callers supply; zero-padded to the input schema.
        input_means: Means subtracted from supplied features before padding.
        input_scales: Scales supplied features are divided by before padding.
        training_meta: Training settings, per-epoch losses, and provenance.
    """
    layers: list[Layer]
    input_schema: typing.Optional[FeatureSchema] = None
    feature_schema: typing.Optional[FeatureSchema] = None
    input_means: typing.Optional[np.ndarray] = None
    input_scales: typing.Optional[np.ndarray] = None
    training_meta: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        assert self.layers, "network must have at least one layer"
        for previous, layer in zip(self.layers, self.layers[1:]):
            assert previous.weights.shape[0] == layer.weights.shape[1], \
                f"layer with {previous.weights.shape[0]} outputs cannot feed layer with " \
                f"{layer.weights.shape[1]} inputs"
        if self.feature_schema is None:
            self.feature_schema = self.input_schema
        if self.input_schema is not None:
            assert self.input_schema.width == self.num_inputs, \
                f"schema width {self.input_schema.width} does not match {self.num_inputs} inputs"
            self.feature_schema.slots(self.input_schema)

    @property
    def num_inputs(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def num_features(self) -> int:
        return self.num_inputs if self.feature_schema is None else self.feature_schema.width

    @property
    def identifier(self) -> str:
        return hash_json(self.to_dict())

    def to_dict(self) -> dict:
        return {
            "layers": [layer.to_dict() for layer in self.layers],
            "input_schema": None if self.input_schema is None else self.input_schema.to_dict(),
            "feature_schema": None if self.feature_schema is None else
            self.feature_schema.to_dict(),
            "input_means": self.input_means,
            "input_scales": self.input_scales,
            "training_meta": self.training_meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkCheckpoint":
        schemas = [None if data.get(key) is None else FeatureSchema.from_dict(data[key])
                   for key in ["input_schema", "feature_schema"]]
        stats = [None if data.get(key) is None else np.asarray(data[key], dtype=float)
                 for key in ["input_means", "input_scales"]]
        return cls([Layer.from_dict(layer) for layer in data["layers"]], *schemas, *stats,
                   data.get("training_meta", {}))

    def save(self, path: str) -> None:
        dump_json(self.to_dict(), path)

    @classmethod
    def load(cls, path: str) -> "NetworkCheckpoint":
        return cls.from_dict(load_json(path))


class DenseStack(th.nn.Module):
    """
    Apply a sequence of dense layers, each followed by its own activation.

    Args:
        num_nodes: Sequence of number of nodes. The first number of nodes must match the input.
        activations: Activation after each layer.
    """
    def __init__(self, num_nodes: typing.Sequence[int], activations: typing.Sequence[str]):
        super().__init__()
        assert len(num_nodes) == len(activations) + 1, \
            f"{len(num_nodes)} node counts require {len(num_nodes) - 1} activations"
        self.activations = list(activations)
        layers = []
        for i, j, activation in zip(num_nodes, num_nodes[1:], activations):
            layers.extend([th.nn.Linear(i, j, dtype=th.float64), ACTIVATIONS[activation]()])
        self.layers = th.nn.Sequential(*layers)

    def forward(self, x: th.Tensor) -> th.Tensor:
        return self.layers(x).squeeze(-1)

    @property
    def linears(self) -> list[th.nn.Linear]:
        return [module for module in self.layers if isinstance(module, th.nn.Linear)]

    @classmethod
    def from_layers(cls, layers: typing.Sequence[Layer]) -> "DenseStack":
        num_nodes = [layers[0].weights.shape[1]] + [layer.weights.shape[0] for layer in layers]
        stack = cls(num_nodes, [layer.activation for layer in layers])
        with th.no_grad():
            for linear, layer in zip(stack.linears, layers):
                linear.weight.copy_(th.as_tensor(layer.weights))
                linear.bias.copy_(th.as_tensor(layer.biases))
        return stack

    def to_layers(self) -> list[Layer]:
        return [Layer(linear.weight.detach().numpy().copy(), linear.bias.detach().numpy().copy(),
                      activation) for linear, activation in zip(self.linears, self.activations)]


def init_layers(num_inputs: int, rng: RngStream, hidden_units: typing.Sequence[int] = HIDDEN_UNITS,
                output_activation: str = "sigmoid") -> list[Layer]:
    """
    Initialize weights and biases uniformly in :math:`\\pm 1 / \\sqrt{\\text{fan-in}}`.
    """
    generator = rng.generator()
    num_nodes = [num_inputs, *hidden_units, 1]
    activations = ["relu"] * len(hidden_units) + [output_activation]
    layers = []
    for fan_in, fan_out, activation in zip(num_nodes, num_nodes[1:], activations):
        bound = 1 / np.sqrt(fan_in)
        weights = generator.uniform(-bound, bound, (fan_out, fan_in))
        biases = generator.uniform(-bound, bound, fan_out)
        layers.append(Layer(weights, biases, activation))
    return layers


def prepare_inputs(checkpoint: NetworkCheckpoint, features: np.ndarray) -> th.Tensor:
    """
    Standardize supplied features and zero-pad them to the network's input width.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != checkpoint.num_features:
        raise SchemaError(f"expected features with {checkpoint.num_features} columns but got "
                          f"shape {features.shape}")
    if checkpoint.input_means is not None:
        features = (features - checkpoint.input_means) / checkpoint.input_scales
    if checkpoint.num_features != checkpoint.num_inputs:
        padded = np.zeros((features.shape[0], checkpoint.num_inputs))
        padded[:, checkpoint.feature_schema.slots(checkpoint.input_schema)] = features
        features = padded
    return th.as_tensor(features)


def predict(checkpoint: NetworkCheckpoint, features: np.ndarray) -> np.ndarray:
    """
    Evaluate the network.

    Args:
        checkpoint: Network to evaluate.
        features: Feature matrix matching the checkpoint's feature schema.

    Returns:
        outputs: Probabilities of being well-powered or power estimates.
    """
    module = DenseStack.from_layers(checkpoint.layers)
    module.eval()
    with th.no_grad():
        return module(prepare_inputs(checkpoint, features)).numpy()


def predict_labels(checkpoint: NetworkCheckpoint, features: np.ndarray) -> np.ndarray:
    return (predict(checkpoint, features) > 0.5).astype(int)


@dataclasses.dataclass
class TrainConfig:
    """
    Settings for training a surrogate with Adam.

    Args:
        epochs: Number of passes over the training data.
        learning_rate: Adam step size.
        batch_size: Minibatch size.
        task: Classify points as well-powered relative to `boundary` or regress power.
        boundary: Power classification boundary.
        loss: Binary cross-entropy or mean squared error (defaults to the task's loss).
        standardize: Store feature means and scales in the checkpoint and standardize inputs.
        patience: Stop if the validation loss does not improve for this many epochs; disabled
            if `None`.
        validation_fraction: Fraction of training rows held out for early stopping and learning
            rate sweeps.
        sweep: Select the learning rate from a coarse grid before training.
    """
    epochs: int = 500
    learning_rate: float = 1e-3
    batch_size: int = 32
    task: typing.Literal["classify", "regress"] = "classify"
    boundary: float = 0.8
    loss: typing.Optional[typing.Literal["bce", "mse"]] = None
    standardize: bool = True
    patience: typing.Optional[int] = None
    validation_fraction: float = 0.2
    sweep: bool = False
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self):
        if self.task not in {"classify", "regress"}:
            raise ValueError(f"unknown task {self.task}")
        if self.loss is None:
            self.loss = "bce" if self.task == "classify" else "mse"
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss}")
        if self.epochs < 0:
            raise ValueError(f"number of epochs must be non-negative but got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be positive but got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning rate must be positive but got {self.learning_rate}")
        if self.patience is not None and self.patience < 1:
            raise ValueError(f"patience must be positive but got {self.patience}")
        if not 0 < self.validation_fraction < 1:
            raise ValueError(f"validation fraction must be in (0, 1) but got "
                             f"{self.validation_fraction}")


def _validate_training_data(features: np.ndarray, labels: np.ndarray, config: TrainConfig) \
        -> tuple[np.ndarray, np.ndarray]:
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError(f"expected a non-empty feature matrix but got shape {features.shape}")
    if labels.shape != features.shape[:1]:
        raise ValueError(f"expected {features.shape[0]} labels but got shape {labels.shape}")
    if config.task == "classify" and not np.all((labels == 0) | (labels == 1)):
        raise ValueError("classification labels must be binary")
    if config.task == "regress" and not np.all((labels >= 0) & (labels <= 1)):
        raise ValueError("regression labels must be in [0, 1]")
    return features, labels


def _split_validation(n: int, fraction: float, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    num_validation = int(round(n * fraction))
    if not 0 < num_validation < n:
        raise ValueError(f"cannot hold out a validation fraction of {fraction} from {n} rows")
    permutation = rng.generator().permutation(n)
    return np.sort(permutation[num_validation:]), np.sort(permutation[:num_validation])


def train_pnn(features: np.ndarray, labels: np.ndarray, config: TrainConfig, rng: RngStream,
              init: NetworkCheckpoint = None, schema: FeatureSchema = None,
              show_progress: bool = False) -> NetworkCheckpoint:
    """
    Train a surrogate with minibatch Adam.

    Args:
        features: Feature matrix with shape `(n, p)`.
        labels: Binary labels for classification or powers for regression.
        config: Training settings.
        rng: Stream for initialization, validation splits, and minibatch shuffling.
        init: Network to fine-tune, e.g., from :func:`transfer_init`; a fresh network with
            :data:`HIDDEN_UNITS` is initialized if not given.
        schema: Feature schema of a fresh network (inferred as having no principal components if
            not given).
        show_progress: Show a progress bar over epochs.

    Returns:
        checkpoint: Network after the final epoch or, with early stopping, the best validation
            epoch.
    """
    features, labels = _validate_training_data(features, labels, config)
    if init is None:
        schema = schema or FeatureSchema(features.shape[1] - 2, 0)
        if schema.width != features.shape[1]:
            raise SchemaError(f"schema width {schema.width} does not match features with shape "
                              f"{features.shape}")
        means = scales = None
        if config.standardize:
            scaler = preprocessing.StandardScaler().fit(features)
            means, scales = scaler.mean_, scaler.scale_
        checkpoint = NetworkCheckpoint(init_layers(schema.width, rng.spawn(0)), schema, schema,
                                       means, scales)
        source = {"kind": "fresh"}
    else:
        checkpoint = init
        source = init.training_meta.get("source", {"kind": "fresh"})

    if config.patience is None:
        train_idx = np.arange(features.shape[0])
        validation_idx = None
    else:
        train_idx, validation_idx = _split_validation(features.shape[0],
                                                      config.validation_fraction, rng.spawn(1))

    module = DenseStack.from_layers(checkpoint.layers)
    optimizer = th.optim.Adam(module.parameters(), config.learning_rate, betas=config.betas,
                              eps=config.eps)
    loss_function = LOSSES[config.loss]()
    x = prepare_inputs(checkpoint, features)
    y = th.as_tensor(labels)
    generator = th.Generator().manual_seed(rng.spawn(2).integer_seed())
    data_loader = th.utils.data.DataLoader(
        th.utils.data.TensorDataset(x[train_idx], y[train_idx]), config.batch_size,
        shuffle=True, generator=generator,
    )

    logger = logging.getLogger("train_pnn")
    losses = []
    best_validation_loss = float("inf")
    best_layers = None
    num_bad_epochs = 0
    epochs = range(1, config.epochs + 1)
    for epoch in tqdm(epochs) if show_progress else epochs:
        module.train()
        for xb, yb in data_loader:
            loss = loss_function(module(xb), yb)
            if loss.isnan():
                raise TrainingDivergedError(f"training loss is NaN at epoch {epoch}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()

        module.eval()
        with th.no_grad():
            train_loss = loss_function(module(x[train_idx]), y[train_idx]).item()
        losses.append(train_loss)
        message = f"epoch {epoch:3d}: train loss = {train_loss:.5f}"

        if validation_idx is not None:
            with th.no_grad():
                validation_loss = loss_function(module(x[validation_idx]),
                                                y[validation_idx]).item()
            if validation_loss < best_validation_loss:
                best_validation_loss = validation_loss
                best_layers = module.to_layers()
                num_bad_epochs = 0
            else:
                num_bad_epochs += 1
            message += f"; validation loss = {validation_loss:.5f}; # bad epochs = " \
                f"{num_bad_epochs} / {config.patience}"

        logger.log(logging.INFO if epoch % 100 == 0 else logging.DEBUG, message)
        if validation_idx is not None and num_bad_epochs >= config.patience:
            logger.info("stopping early after %d epochs", epoch)
            break

    training_meta = {
        "epochs": config.epochs,
        "epochs_run": len(losses),
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "loss": config.loss,
        "task": config.task,
        "boundary": config.boundary if config.task == "classify" else None,
        "seed": rng.master_seed,
        "stream": list(rng.path),
        "source": source,
        "losses": losses,
    }
    return dataclasses.replace(checkpoint, layers=best_layers or module.to_layers(),
                               training_meta=training_meta)


def evaluate_loss(checkpoint: NetworkCheckpoint, features: np.ndarray, labels: np.ndarray,
                  loss: str = "bce") -> float:
    module = DenseStack.from_layers(checkpoint.layers)
    with th.no_grad():
        return LOSSES[loss]()(module(prepare_inputs(checkpoint, features)),
                              th.as_tensor(np.asarray(labels, dtype=float))).item()


def sweep_learning_rate(features: np.ndarray, labels: np.ndarray, config: TrainConfig,
                        rng: RngStream, schema: FeatureSchema = None,
                        grid: typing.Sequence[float] = LEARNING_RATE_GRID) -> float:
    """
    Select the learning rate with the smallest validation loss after training on the remaining
    rows.
    """
    features, labels = _validate_training_data(features, labels, config)
    train_idx, validation_idx = _split_validation(features.shape[0], config.validation_fraction,
                                                  rng.spawn(0))
    best = None
    for learning_rate in grid:
        candidate = dataclasses.replace(config, learning_rate=learning_rate, patience=None,
                                        sweep=False)
        checkpoint = train_pnn(features[train_idx], labels[train_idx], candidate, rng.spawn(1),
                               schema=schema)
        loss = evaluate_loss(checkpoint, features[validation_idx], labels[validation_idx],
                             config.loss)
        LOGGER.info("validation loss for learning rate %g: %.5f", learning_rate, loss)
        if best is None or loss < best[1]:
            best = (learning_rate, loss)
    LOGGER.info("selected learning rate %g", best[0])
    return best[0]


def transfer_init(parent: NetworkCheckpoint, child_schema: FeatureSchema) -> NetworkCheckpoint:
    """
    Initialize a network for a smaller feature schema from a pretrained parent. Child features
    are mapped block-wise into the parent's input slots and unmapped slots receive zeros.

    Args:
        parent: Pretrained network with an input schema.
        child_schema: Schema of the features the new network receives.

    Returns:
        checkpoint: Network with the parent's layers and input width.
    """
    if parent.input_schema is None:
        raise IncompatibleTransferError("parent network has no input schema")
    child_slots = child_schema.slots(parent.input_schema)

    means = scales = None
    if parent.input_means is not None:
        # Map the parent's feature statistics onto the child's columns via the shared input slots.
        parent_slots = list(parent.feature_schema.slots(parent.input_schema))
        means = np.zeros(child_schema.width)
        scales = np.ones(child_schema.width)
        for i, slot in enumerate(child_slots):
            if slot in parent_slots:
                j = parent_slots.index(slot)
                means[i] = parent.input_means[j]
                scales[i] = parent.input_scales[j]

    training_meta = dict(parent.training_meta)
    training_meta.update(source={"kind": "transfer", "parent": parent.identifier}, epochs=0,
                         epochs_run=0, losses=[])
    layers = [Layer(layer.weights.copy(), layer.biases.copy(), layer.activation)
              for layer in parent.layers]
    return NetworkCheckpoint(layers, parent.input_schema, child_schema, means, scales,
                             training_meta)


def _loss_closure(checkpoint: NetworkCheckpoint, features: np.ndarray, targets: np.ndarray,
                  loss: str) -> tuple[DenseStack, typing.Callable[[], th.Tensor]]:
    module = DenseStack.from_layers(checkpoint.layers)
    x = prepare_inputs(checkpoint, features)
    y = th.as_tensor(np.asarray(targets, dtype=float))
    loss_function = LOSSES[loss]()
    return module, lambda: loss_function(module(x), y)


def loss_gradients(checkpoint: NetworkCheckpoint, features: np.ndarray, targets: np.ndarray,
                   loss: str = "bce") -> list[tuple[np.ndarray, np.ndarray]]:
    """
    Gradients of the loss with respect to the weights and biases of each layer.
    """
    module, evaluate = _loss_closure(checkpoint, features, targets, loss)
    evaluate().backward()
    return [(linear.weight.grad.numpy().copy(), linear.bias.grad.numpy().copy())
            for linear in module.linears]


def grad_check(checkpoint: NetworkCheckpoint, features: np.ndarray, targets: np.ndarray = None,
               loss: str = "bce", h: float = 1e-5) -> float:
    """
    Compare backpropagated gradients with central finite differences over all parameters.

    Args:
        checkpoint: Network to check.
        features: Non-empty batch of features.
        targets: Targets of the loss (defaults to alternating binary labels).
        loss: Loss function.
        h: Finite difference step size.

    Returns:
        error: Maximum relative error :math:`|a - f| / \\max(|a|, |f|, 10^{-6})` between analytic
            gradients :math:`a` and finite differences :math:`f`.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError(f"expected a non-empty batch but got shape {features.shape}")
    if targets is None:
        targets = np.arange(features.shape[0]) % 2

    module, evaluate = _loss_closure(checkpoint, features, targets, loss)
    evaluate().backward()
    max_error = 0.0
    with th.no_grad():
        for param in module.parameters():
            flat = param.view(-1)
            analytic = param.grad.view(-1)
            for i in range(flat.numel()):
                original = flat[i].item()
                flat[i] = original + h
                plus = evaluate().item()
                flat[i] = original - h
                minus = evaluate().item()
                flat[i] = original
                numeric = (plus - minus) / (2 * h)
                a = analytic[i].item()
                error = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
                max_error = max(max_error, error)
    return max_error
