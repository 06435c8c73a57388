import matplotlib.pyplot as plt


def line_chart(title: str, y, x=None, ylabel: str = "", xlabel: str = "step"):
    fig = plt.figure()
    ax = fig.add_subplot(111)
    if x is None:
        x = list(range(len(y)))
    ax.plot(x, y, marker="o", markersize=3)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig


def digits_chart(digits_by_step, title: str = "Correct digits after each step"):
    steps = list(range(1, len(digits_by_step) + 1))
    return line_chart(title, digits_by_step, steps, ylabel="correct decimal places", xlabel="accelerated terms summed")
