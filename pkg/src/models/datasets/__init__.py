from src.models.datasets.generators import (
    DatasetSpec,
    DuplicationSpec,
    GeneratedDataset,
    gen_dataset,
    read_dataset,
    write_dataset,
)
