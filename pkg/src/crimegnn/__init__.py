"""Community detection with a modularity-trained graph neural network and
classical baselines (Louvain, spectral clustering, Infomap)."""

from .graph import Graph, GraphError, Partition, aggregate, build_graph, canonicalize
from .graphio import PlantedSpec, fixture, parse_edge_list, parse_labels, planted_partition
from .infomap import infomap, map_equation
from .louvain import louvain
from .model import TrainConfig, predict_partition, train
from .objectives import coverage, modularity, pairwise_f1, soft_modularity
from .spectral import spectral_clustering

__version__ = "0.1.0"
